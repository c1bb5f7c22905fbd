// Scenario form state: mirrors the spec document field-for-field plus
// UI-only bookkeeping. formToSpec(specToForm(doc)) must reproduce doc.

import {
  ChannelDoc,
  LogLevel,
  MobilityLogicDoc,
  SpecDoc,
  TrafficProfileDoc,
  UEDoc,
  defaultSpecDoc,
} from "./types.js";

export interface UEFormState {
  id: string;
  initialPosition: [number, number, number];
  speedMps: number;
  directionDeg: number;
  elevationDeg: number;
  areaLo: [number, number, number];
  areaHi: [number, number, number];
  mobilityKind: "static" | "linear_bounce" | "waypoint";
  waypointPoints: [number, number, number][];
  trafficKind: "none" | "periodic_ssb_only" | "cbr";
  cbrRateKbps: number;
  channel: ChannelDoc; // kept verbatim; edited through dedicated controls
}

export interface ScenarioFormState {
  name: string;
  seed: number;
  durationS: number;
  snapshotIntervalS: number;
  logVerbosity: Record<string, LogLevel>;
  captureSubcarriers: number;
  captureSymbols: number;
  radio: SpecDoc["radio"];
  ues: UEFormState[];
  // UI-only state
  selectedPreset: string;
  dirty: boolean;
}

function vec3(v: number[]): [number, number, number] {
  return [v[0], v[1], v[2]];
}

export function specToForm(doc: SpecDoc): ScenarioFormState {
  return {
    name: doc.name,
    seed: doc.seed,
    durationS: doc.duration_s,
    snapshotIntervalS: doc.snapshot_interval_s,
    logVerbosity: { ...doc.log_verbosity },
    captureSubcarriers: doc.capture.num_subcarriers,
    captureSymbols: doc.capture.num_symbols,
    radio: { ...doc.radio, antenna_position: [...doc.radio.antenna_position] },
    ues: doc.ues.map(ueToForm),
    selectedPreset: "",
    dirty: false,
  };
}

function ueToForm(ue: UEDoc): UEFormState {
  const logic = ue.mobility_logic;
  const traffic = ue.traffic_profile;
  return {
    id: ue.id,
    initialPosition: vec3(ue.initial_position),
    speedMps: ue.speed_mps,
    directionDeg: ue.direction_deg,
    elevationDeg: ue.elevation_deg,
    areaLo: vec3(ue.mobility_area.lo),
    areaHi: vec3(ue.mobility_area.hi),
    mobilityKind: typeof logic === "string" ? logic : "waypoint",
    waypointPoints: typeof logic === "string" ? [] : logic.points.map(vec3),
    trafficKind: typeof traffic === "string" ? traffic : "cbr",
    cbrRateKbps: typeof traffic === "string" ? 1000.0 : traffic.rate_kbps,
    channel: typeof ue.channel === "string" ? ue.channel : { ...ue.channel },
  };
}

export function formToSpec(form: ScenarioFormState): SpecDoc {
  return {
    format_version: 1,
    name: form.name,
    seed: form.seed,
    duration_s: form.durationS,
    snapshot_interval_s: form.snapshotIntervalS,
    log_verbosity: { ...form.logVerbosity },
    capture: {
      num_subcarriers: form.captureSubcarriers,
      num_symbols: form.captureSymbols,
    },
    radio: { ...form.radio, antenna_position: [...form.radio.antenna_position] },
    ues: form.ues.map(formToUe),
  };
}

function formToUe(ue: UEFormState): UEDoc {
  let logic: MobilityLogicDoc;
  if (ue.mobilityKind === "waypoint") {
    logic = { type: "waypoint", points: ue.waypointPoints.map((p) => [...p]) };
  } else {
    logic = ue.mobilityKind;
  }
  let traffic: TrafficProfileDoc;
  if (ue.trafficKind === "cbr") {
    traffic = { type: "cbr", rate_kbps: ue.cbrRateKbps };
  } else {
    traffic = ue.trafficKind;
  }
  return {
    id: ue.id,
    initial_position: [...ue.initialPosition],
    speed_mps: ue.speedMps,
    direction_deg: ue.directionDeg,
    elevation_deg: ue.elevationDeg,
    mobility_area: { lo: [...ue.areaLo], hi: [...ue.areaHi] },
    mobility_logic: logic,
    traffic_profile: traffic,
    channel: typeof ue.channel === "string" ? ue.channel : { ...ue.channel },
  };
}

export function defaultForm(): ScenarioFormState {
  return specToForm(defaultSpecDoc());
}

// Canonical serialization: recursively sorted keys, 2-space indent. Parses to
// the same document the backend canonicalizes.
export function canonicalJson(value: unknown): string {
  return stringify(value, 0) + "\n";
}

function stringify(value: unknown, depth: number): string {
  const pad = "  ".repeat(depth + 1);
  const close = "  ".repeat(depth);
  if (value === null || typeof value === "number" || typeof value === "boolean") {
    return JSON.stringify(value);
  }
  if (typeof value === "string") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    if (value.length === 0) return "[]";
    const items = value.map((v) => pad + stringify(v, depth + 1));
    return "[\n" + items.join(",\n") + "\n" + close + "]";
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj)
    .filter((k) => obj[k] !== undefined)
    .sort();
  if (keys.length === 0) return "{}";
  const items = keys.map((k) => pad + JSON.stringify(k) + ": " + stringify(obj[k], depth + 1));
  return "{\n" + items.join(",\n") + "\n" + close + "}";
}

export interface FieldError {
  field: string;
  reason: string;
}

const VALID_SPACINGS = [15, 30, 60, 120];

// Client-side checks for inline feedback; the backend remains authoritative.
export function checkForm(form: ScenarioFormState): FieldError[] {
  const errors: FieldError[] = [];
  if (!form.name) errors.push({ field: "name", reason: "required" });
  if (form.durationS <= 0) errors.push({ field: "duration_s", reason: "must be > 0" });
  if (form.snapshotIntervalS <= 0) {
    errors.push({ field: "snapshot_interval_s", reason: "must be > 0" });
  } else if (form.durationS / form.snapshotIntervalS < 1) {
    errors.push({ field: "snapshot_interval_s", reason: "duration/interval must be >= 1" });
  }
  if (!VALID_SPACINGS.includes(form.radio.subcarrier_spacing_khz)) {
    errors.push({ field: "radio.subcarrier_spacing", reason: `must be one of ${VALID_SPACINGS}` });
  }
  if (form.radio.bandwidth_mhz <= 0 || form.radio.bandwidth_mhz > 100) {
    errors.push({ field: "radio.bandwidth_mhz", reason: "must be in (0, 100]" });
  }
  if (form.radio.tx_power_dbm < -40 || form.radio.tx_power_dbm > 50) {
    errors.push({ field: "radio.tx_power_dbm", reason: "must be in [-40, 50]" });
  }
  if (form.ues.length === 0) errors.push({ field: "ues", reason: "at least one UE" });
  form.ues.forEach((ue) => {
    const prefix = `ues[${ue.id}]`;
    if (!ue.id) errors.push({ field: prefix + ".id", reason: "required" });
    if (ue.speedMps < 0) errors.push({ field: prefix + ".speed_mps", reason: "must be >= 0" });
    if (ue.mobilityKind === "static" && ue.speedMps !== 0) {
      errors.push({ field: prefix + ".speed_mps", reason: "static requires speed 0" });
    }
    for (let axis = 0; axis < 3; axis++) {
      if (ue.initialPosition[axis] < ue.areaLo[axis] || ue.initialPosition[axis] > ue.areaHi[axis]) {
        errors.push({ field: prefix + ".initial_position", reason: "outside mobility_area" });
        break;
      }
    }
  });
  return errors;
}
