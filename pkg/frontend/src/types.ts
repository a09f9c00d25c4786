/** Wire types mirroring the consultation service JSON contracts. */

export interface PendingQuestion {
  attribute: string;
  prompt: string;
  answers: string[];
}

export interface SessionResult {
  attribute: string;
  value: string;
  advice: string;
  rules: string[];
}

export type SessionStatus = "active" | "concluded" | "unknown" | "awaiting_discovery";

export interface SessionView {
  id: string;
  goal: string;
  status: SessionStatus;
  facts: Record<string, string>;
  answers_applied: number;
  pending_question: PendingQuestion | null;
  result: SessionResult | null;
  missing?: string[][];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: unknown;
}

export interface RuleInfo {
  id: string;
  premises: string[];
  conclusion: string;
  support: number;
  firings: number;
  experience: number;
  origin: string;
  text: string;
}

export interface CaseInfo {
  id: number;
  label: string;
  observations: Record<string, string>;
  text: string;
}

export interface AuditEntry {
  timestamp: string;
  actor: string;
  action: string;
  rule_ids: string[];
  text: string;
  note: string;
}

export interface AttributeInfo {
  name: string;
  domain: string[];
  askable: boolean;
}

export interface SchemaInfo {
  goal_attribute: string;
  attributes: AttributeInfo[];
}

export interface FactBody {
  attribute: string;
  value: string;
}

export interface DiscoveryTemplate {
  session_id: string;
  premises: FactBody[];
  conclusion_attribute: string;
  goal_values: string[];
}

export interface ValidationResult {
  status: "accepted" | "conflicts";
  conflicting_cases: number[];
  subsumed_existing: string[];
}

export interface DiscoveryCommitResponse {
  validation: ValidationResult;
  session: SessionView;
}

export interface GeneralizationReport {
  mode: string;
  removed: string[];
  kept: string[];
  added: string[];
  exceptions: number[];
  accuracy_before: number;
  accuracy_after: number;
  skipped: string[][];
}

export interface InduceResponse {
  report: string;
  rules: RuleInfo[];
}

export interface Explanation {
  mode: string;
  text: string;
}
