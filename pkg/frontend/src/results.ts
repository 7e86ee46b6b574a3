/** Run-results view model: run state, per-task rows with lazily fetched
 * logs, the DSL source pane, and a poller that stops once the run reaches
 * a terminal state. */

import { isTerminal } from './types.js';
import type { RunRecord, TaskRun } from './types.js';

export interface TaskRow {
  taskId: string;
  state: TaskRun['state'];
  exitInfo: number | null;
  startedAt: string | null;
  finishedAt: string | null;
  /** null until the user expands the row and the log is fetched. */
  log: string | null;
}

export interface RunView {
  runId: string;
  workflowName: string;
  state: RunRecord['state'];
  scheduledFor: string;
  startedAt: string | null;
  finishedAt: string | null;
  tasks: TaskRow[];
  dslSource: string;
  terminal: boolean;
}

export function runView(record: RunRecord, previous?: RunView): RunView {
  const priorLogs = new Map((previous?.tasks ?? []).map((row) => [row.taskId, row.log]));
  const tasks = Object.values(record.taskRuns)
    .sort((a, b) => a.taskId.localeCompare(b.taskId))
    .map((task) => ({
      taskId: task.taskId,
      state: task.state,
      exitInfo: task.exitInfo,
      startedAt: task.startedAt,
      finishedAt: task.finishedAt,
      log: priorLogs.get(task.taskId) ?? null,
    }));
  return {
    runId: record.runId,
    workflowName: record.workflowName,
    state: record.state,
    scheduledFor: record.scheduledFor,
    startedAt: record.startedAt,
    finishedAt: record.finishedAt,
    tasks,
    dslSource: record.dslSource,
    terminal: isTerminal(record.state),
  };
}

export interface RunSource {
  getRun(runId: string): Promise<RunRecord>;
  taskLog(runId: string, taskId: string): Promise<string>;
}

/** Polls a run until it reaches a terminal state, invoking `onUpdate` with
 * a fresh view on every fetch. Logs are fetched only on demand through
 * `loadLog` and carried across refreshes. */
export class RunPoller {
  private readonly source: RunSource;
  private readonly runId: string;
  private readonly intervalMs: number;
  private readonly onUpdate: (view: RunView) => void;
  private view: RunView | undefined;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    source: RunSource,
    runId: string,
    onUpdate: (view: RunView) => void,
    intervalMs = 1000,
  ) {
    this.source = source;
    this.runId = runId;
    this.onUpdate = onUpdate;
    this.intervalMs = intervalMs;
  }

  /** Fetch once and schedule follow-ups while the run is live. */
  async start(): Promise<RunView> {
    const view = await this.refresh();
    this.scheduleNext();
    return view;
  }

  async refresh(): Promise<RunView> {
    const record = await this.source.getRun(this.runId);
    this.view = runView(record, this.view);
    this.onUpdate(this.view);
    return this.view;
  }

  private scheduleNext(): void {
    if (this.stopped || this.view?.terminal) return;
    this.timer = setTimeout(() => {
      void this.refresh()
        .catch(() => undefined)
        .then(() => this.scheduleNext());
    }, this.intervalMs);
  }

  get polling(): boolean {
    return !this.stopped && this.timer !== null && !(this.view?.terminal ?? false);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  async loadLog(taskId: string): Promise<string> {
    const log = await this.source.taskLog(this.runId, taskId);
    if (this.view) {
      const row = this.view.tasks.find((t) => t.taskId === taskId);
      if (row) {
        row.log = log;
        this.onUpdate(this.view);
      }
    }
    return log;
  }
}
