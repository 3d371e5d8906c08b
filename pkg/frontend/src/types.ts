// Wire types for the avatarkit session API. These mirror the JSON the
// service returns; the console renders them and adds nothing of its own.

export type SessionStateName =
  | "Created"
  | "PortraitReady"
  | "AgesGenerated"
  | "AppearanceSelected"
  | "SpeechReady"
  | "Animated"
  | "PostProcessed"
  | "Assessed";

export type StageName =
  | "Ages"
  | "SelectAppearance"
  | "Dress"
  | "Speak"
  | "Animate"
  | "NovelView"
  | "Style"
  | "SuperResolve"
  | "Assess";

export interface TranscriptRound {
  index: number;
  user: string;
  reply: string;
}

export interface AgeEntry {
  age: number;
  artifact_id: string;
}

export interface Snapshot {
  session_id: string;
  state: SessionStateName;
  transcript: TranscriptRound[];
  inputs: Record<string, string>;
  ages: AgeEntry[];
  selected: string | null;
  selections: Record<string, unknown>;
  artifacts: Record<string, string>;
  flags: string[];
  created_at: number;
  updated_at: number;
}

export interface GarmentEntry {
  garment_id: string;
  label: string;
  artifact_id: string;
}

export interface ManifestRow {
  stage: string;
  operation: string;
  inputs: string[];
  output: string | null;
  backend: string;
  wall_ms: number;
}

export interface ManifestPayload {
  session_id: string;
  config: Record<string, unknown>;
  rows: ManifestRow[];
}

export interface FrameScore {
  frame: number;
  cpbd: number;
  externals: Record<string, number>;
}

export interface QualityReport {
  name?: string;
  video: string | null;
  cpbd: number;
  normalized: Record<string, number>;
  frames: FrameScore[];
  flags: string[];
}

export interface SessionHandle {
  session_id: string;
  state: SessionStateName;
}

export interface StageResult {
  artifact_id: string | null;
  state: SessionStateName;
}

export interface MessageResult {
  reply: string;
  round: number;
}
