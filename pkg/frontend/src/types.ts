/** Wire types for the flowviz REST API. Field names match the server's
 * JSON exactly; these are the documents the UI submits and receives. */

export type ValueType = 'string' | 'int' | 'float' | 'bool' | 'file';
export type HttpMethod = 'GET' | 'POST' | 'PUT' | 'DELETE';
export type AccessKind = 'api' | 'library';
export type OutputMode = 'stdout' | 'file';

export interface ParamRule {
  name: string;
  flag?: string | null;
  valueType: ValueType;
  required?: boolean;
  default?: unknown;
  allowedValues?: unknown[] | null;
}

export interface CommandSpec {
  name: string;
  subcommand?: string | null;
  params?: ParamRule[];
  outputMode?: OutputMode;
  outputFileParam?: string | null;
}

export interface EndpointSpec {
  name: string;
  path: string;
  method: HttpMethod;
  allowedHeaders?: string[];
  bodyFields?: ParamRule[];
  queryFields?: ParamRule[];
}

export interface ApiSpec {
  baseUrl: string;
  endpoints: EndpointSpec[];
}

export interface LibrarySpec {
  program: string;
  commands: CommandSpec[];
}

export interface AccessSpec {
  kind: AccessKind;
  api?: ApiSpec;
  library?: LibrarySpec;
}

export interface ToolContract {
  name: string;
  description?: string;
  author?: string;
  access: AccessSpec;
  createdAt?: string;
}

export interface TaskSpec {
  id: string;
  tool: string;
  action: string;
  args: Record<string, unknown>;
  dependsOn: string[];
}

export interface WorkflowSpec {
  name: string;
  owner: string;
  schedule: { runAt?: string };
  tasks: TaskSpec[];
}

export interface TaskRun {
  taskId: string;
  state: 'Pending' | 'Running' | 'Succeeded' | 'Failed' | 'Skipped';
  exitInfo: number | null;
  logRef: string | null;
  outputPath: string | null;
  startedAt: string | null;
  finishedAt: string | null;
}

export interface RunRecord {
  runId: string;
  workflowName: string;
  owner: string;
  state: 'Scheduled' | 'Running' | 'Succeeded' | 'Failed' | 'Canceled';
  scheduledFor: string;
  startedAt: string | null;
  finishedAt: string | null;
  taskRuns: Record<string, TaskRun>;
  dslSource: string;
}

export interface FieldError {
  path: string;
  reason: string;
}

export interface ApiError {
  status: number;
  code: string;
  detail: string;
  fieldErrors?: FieldError[];
}

export const RUN_TERMINAL_STATES = ['Succeeded', 'Failed', 'Canceled'] as const;

export function isTerminal(state: RunRecord['state']): boolean {
  return (RUN_TERMINAL_STATES as readonly string[]).includes(state);
}
