// Wire types for the annotation service API.

export type Grade = 0 | 1 | 2 | 3;

export interface ServiceConfig {
  grade_labels: Record<string, string>;
  grade_guidelines: Record<string, string>;
  search_url_template: string | null;
}

export interface TaskView {
  done: false;
  topic: string;
  title: string;
  doc: string;
  text: string;
  position: number;
  remaining: number;
}

export interface DoneView {
  done: true;
  summary: Record<string, { total: number; judged: number }>;
}

export type NextTaskResponse = TaskView | DoneView;

export interface Progress {
  annotator: string;
  judged: number;
  total: number;
  per_topic: Record<string, { total: number; judged: number }>;
}

export interface TopicInfo {
  topic: string;
  title: string;
  total: number;
  judged: number;
  narrative: string | null;
}

export interface JudgmentAck {
  ok: boolean;
  progress: Progress;
}

export interface NarrativeAck {
  ok: boolean;
  version: number;
}

export interface PendingJudgment {
  topic: string;
  doc: string;
  grade: Grade;
}
