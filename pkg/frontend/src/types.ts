/** Wire formats of the local API. Field names mirror the JSON exactly. */

export interface ParsingRuleDoc {
  pattern: string;
  replacement: string;
}

export interface PromptDoc {
  id: string;
  title: string;
  icon: string;
  template: string;
  temperature: number;
  parsing_rule: ParsingRuleDoc | null;
  insertion_mode: "replace" | "append";
  description: string | null;
  tags: string[];
  recommended_models: string[];
  run_count: number;
  created_at: string;
  updated_at: string;
  source_hub_id: string | null;
}

export interface SpanDoc {
  index: number;
  kind: "insertion" | "deletion" | "replacement";
  original_text: string;
  revised_text: string;
  original_offset: number;
  revised_offset: number;
}

export interface RunResultDoc {
  input: string;
  rendered_prompt: string;
  raw_output: string;
  parsed_output: string;
  parse_matched: boolean;
  spans: SpanDoc[];
  insertion_mode: "replace" | "append";
  model_id: string;
  latency: number;
}

export interface HubEntryDoc {
  id: string;
  title: string;
  icon: string;
  template: string;
  parsing_rule: ParsingRuleDoc | null;
  insertion_mode: "replace" | "append";
  temperature: number;
  description: string;
  tags: string[];
  recommended_models: string[];
  run_count: number;
  shared_at: string;
  report_count: number;
}

export interface ModelDescriptorDoc {
  model_id: string;
  endpoint_kind: string;
}

export type Decision = "accept" | "reject";

export type SlotState = (string | null)[];
