// Shapes exchanged with the rating service. Ideas arrive behind blind
// keys: the service never tells the browser which model wrote what, so
// nothing model-specific can leak into the page.

export interface IdeaView {
  key: string;
  text: string;
}

export interface SessionProgress {
  rated: number;
  total: number;
}

export interface SessionView {
  session_id: string;
  paper_id: string;
  title: string;
  abstract: string;
  ideas: IdeaView[];
  rated_keys: string[];
  status: "open" | "complete";
  progress: SessionProgress;
}

export interface RatingAnswers {
  relevance: number; // 0 or 1
  novelty: number; // 1..5
  feasibility: number; // 0 or 1
}

export interface RatingReceipt {
  status: string;
  idea_key: string;
  session_status: "open" | "complete";
  progress: SessionProgress;
}
