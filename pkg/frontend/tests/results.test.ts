import { describe, expect, it } from 'vitest';

import { RunPoller, runView } from '../src/results.js';
import type { RunSource } from '../src/results.js';
import type { RunRecord, TaskRun } from '../src/types.js';

function task(taskId: string, state: TaskRun['state'], exitInfo: number | null = null): TaskRun {
  return {
    taskId,
    state,
    exitInfo,
    logRef: null,
    outputPath: null,
    startedAt: null,
    finishedAt: null,
  };
}

function record(state: RunRecord['state'], tasks: TaskRun[]): RunRecord {
  return {
    runId: 'run-1',
    workflowName: 'diamond',
    owner: 'demo',
    state,
    scheduledFor: '2026-08-25T00:00:00Z',
    startedAt: null,
    finishedAt: null,
    taskRuns: Object.fromEntries(tasks.map((t) => [t.taskId, t])),
    dslSource: '# dag',
  };
}

class ScriptedSource implements RunSource {
  readonly states: RunRecord[];
  fetches = 0;
  logFetches = 0;

  constructor(states: RunRecord[]) {
    this.states = states;
  }

  async getRun(): Promise<RunRecord> {
    const index = Math.min(this.fetches, this.states.length - 1);
    this.fetches += 1;
    return this.states[index];
  }

  async taskLog(_runId: string, taskId: string): Promise<string> {
    this.logFetches += 1;
    return `log for ${taskId}`;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

describe('runView', () => {
  it('orders task rows by id and marks terminal states', () => {
    const view = runView(record('Failed', [task('B', 'Skipped'), task('A', 'Failed', 2)]));
    expect(view.tasks.map((t) => t.taskId)).toEqual(['A', 'B']);
    expect(view.tasks[0].exitInfo).toBe(2);
    expect(view.terminal).toBe(true);
    expect(view.dslSource).toBe('# dag');
  });

  it('keeps previously loaded logs across refreshes', () => {
    const first = runView(record('Running', [task('A', 'Running')]));
    first.tasks[0].log = 'cached';
    const second = runView(record('Succeeded', [task('A', 'Succeeded', 0)]), first);
    expect(second.tasks[0].log).toBe('cached');
  });
});

describe('RunPoller', () => {
  it('polls until the run is terminal, then stops', async () => {
    const source = new ScriptedSource([
      record('Running', [task('A', 'Running')]),
      record('Running', [task('A', 'Running')]),
      record('Succeeded', [task('A', 'Succeeded', 0)]),
    ]);
    const seen: string[] = [];
    const poller = new RunPoller(source, 'run-1', (view) => seen.push(view.state), 5);
    const first = await poller.start();
    expect(first.state).toBe('Running');

    await sleep(80);
    expect(seen[seen.length - 1]).toBe('Succeeded');
    const fetchesAtTerminal = source.fetches;
    await sleep(40);
    expect(source.fetches).toBe(fetchesAtTerminal);
    poller.stop();
  });

  it('does not poll again after an already-terminal first fetch', async () => {
    const source = new ScriptedSource([record('Succeeded', [task('A', 'Succeeded', 0)])]);
    const poller = new RunPoller(source, 'run-1', () => undefined, 5);
    const view = await poller.start();
    expect(view.terminal).toBe(true);
    await sleep(30);
    expect(source.fetches).toBe(1);
    poller.stop();
  });

  it('fetches logs lazily and attaches them to the view', async () => {
    const source = new ScriptedSource([record('Succeeded', [task('A', 'Succeeded', 0)])]);
    let latest: ReturnType<typeof runView> | null = null;
    const poller = new RunPoller(source, 'run-1', (view) => (latest = view), 5);
    await poller.start();
    expect(source.logFetches).toBe(0);

    const log = await poller.loadLog('A');
    expect(log).toBe('log for A');
    expect(source.logFetches).toBe(1);
    expect(latest!.tasks[0].log).toBe('log for A');
    poller.stop();
  });

  it('stop() halts a live poll immediately', async () => {
    const source = new ScriptedSource([record('Running', [task('A', 'Running')])]);
    const poller = new RunPoller(source, 'run-1', () => undefined, 5);
    await poller.start();
    poller.stop();
    const fetches = source.fetches;
    await sleep(30);
    expect(source.fetches).toBe(fetches);
    expect(poller.polling).toBe(false);
  });
});
