// Wire types for the /v1 API documents.

export type LogLevel = "off" | "summary" | "full";

export interface RadioDoc {
  num_cells: number;
  carrier_frequency_mhz: number;
  bandwidth_mhz: number;
  subcarrier_spacing_khz: number;
  tx_power_dbm: number;
  num_dl_antennas: number;
  num_ul_antennas: number;
  max_mcs: number;
  rx_tx_latency_slots: number;
  antenna_position: number[];
  antenna_type: "isotropic" | "sector";
}

export interface TapDoc {
  delay_ns: number;
  power_db: number;
  doppler_hz: number | "from-mobility";
}

export interface ChannelObjectDoc {
  preset?: string;
  delay_spread_ns?: number;
  doppler_hz?: number | "from-mobility";
  taps?: TapDoc[];
  mimo_correlation?: "low" | "medium" | "high";
  noise_spectral_density_dbm_hz?: number | null;
  path_loss_a_db?: number;
  path_loss_b_db?: number;
  seed?: number;
  normalize_power?: boolean;
}

export type ChannelDoc = string | ChannelObjectDoc;

export type MobilityLogicDoc = "static" | "linear_bounce" | { type: "waypoint"; points: number[][] };

export type TrafficProfileDoc = "none" | "periodic_ssb_only" | { type: "cbr"; rate_kbps: number };

export interface UEDoc {
  id: string;
  initial_position: number[];
  speed_mps: number;
  direction_deg: number;
  elevation_deg: number;
  mobility_area: { lo: number[]; hi: number[] };
  mobility_logic: MobilityLogicDoc;
  traffic_profile: TrafficProfileDoc;
  channel: ChannelDoc;
}

export interface SpecDoc {
  format_version: number;
  name: string;
  seed: number;
  duration_s: number;
  snapshot_interval_s: number;
  log_verbosity: Record<string, LogLevel>;
  capture: { num_subcarriers: number; num_symbols: number };
  radio: RadioDoc;
  ues: UEDoc[];
}

export interface RunStatusDoc {
  format_version: number;
  run_id: string;
  state: "queued" | "running" | "completed" | "failed";
  progress: number;
  queue_position: number | null;
  created: string;
  started: string | null;
  finished: string | null;
  dataset_path: string | null;
  error: string | null;
}

export interface PreviewUEDoc {
  id: string;
  mobility_area: { lo: number[]; hi: number[] };
  times: number[];
  positions: number[][];
}

export interface PreviewDoc {
  format_version: number;
  run_id: string;
  ues: PreviewUEDoc[];
}

export interface StatsDoc {
  format_version: number;
  kind: string;
  var_a: number;
  var_b: number;
  ks_d: number;
  ks_p: number;
  wasserstein: number;
  autocorr_a: number[];
  autocorr_b: number[];
  crosscorr: number[];
  phase_edges: number[];
  phase_hist_a: number[];
  phase_hist_b: number[];
  run_a?: string;
  run_b?: string;
  ue?: number;
}

export function defaultSpecDoc(): SpecDoc {
  return {
    format_version: 1,
    name: "experiment",
    seed: 0,
    duration_s: 1.0,
    snapshot_interval_s: 0.01,
    log_verbosity: { phy: "full", mac: "full", rrc: "summary", nas: "summary" },
    capture: { num_subcarriers: 360, num_symbols: 4 },
    radio: {
      num_cells: 1,
      carrier_frequency_mhz: 3500.0,
      bandwidth_mhz: 20.0,
      subcarrier_spacing_khz: 30.0,
      tx_power_dbm: 0.0,
      num_dl_antennas: 1,
      num_ul_antennas: 1,
      max_mcs: 28,
      rx_tx_latency_slots: 0,
      antenna_position: [0.0, 0.0, 10.0],
      antenna_type: "isotropic",
    },
    ues: [
      {
        id: "ue0",
        initial_position: [0.0, 0.0, 1.5],
        speed_mps: 0.0,
        direction_deg: 0.0,
        elevation_deg: 0.0,
        mobility_area: { lo: [-50.0, -50.0, 0.0], hi: [50.0, 50.0, 3.0] },
        mobility_logic: "static",
        traffic_profile: "periodic_ssb_only",
        channel: "tdla30",
      },
    ],
  };
}
