/** Whiteboard graph model and its mapping to the workflow wire format.
 *
 * Node positions never enter the WorkflowSpec; they live in a parallel
 * layout document so the server-side format stays engine-clean while a
 * reload still restores the drawing. */

import type { TaskSpec, WorkflowSpec } from './types.js';

export interface Position {
  x: number;
  y: number;
}

export interface CanvasNode {
  nodeId: string;
  toolName: string;
  actionName: string;
  position: Position;
  configValues: Record<string, unknown>;
}

export interface CanvasEdge {
  fromNodeId: string;
  toNodeId: string;
}

export interface CanvasGraph {
  nodes: CanvasNode[];
  edges: CanvasEdge[];
}

/** UI-only metadata persisted next to a workflow, keyed by task id. */
export interface CanvasLayout {
  positions: Record<string, Position>;
}

export class EmptyCanvas extends Error {
  constructor() {
    super('the canvas has no nodes to serialize');
    this.name = 'EmptyCanvas';
  }
}

export class ClientCycleDetected extends Error {
  readonly cycle: string[];

  constructor(cycle: string[]) {
    super(`the canvas contains a cycle: ${cycle.join(' -> ')}`);
    this.name = 'ClientCycleDetected';
    this.cycle = cycle;
  }
}

export class GraphInvariantError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'GraphInvariantError';
  }
}

function assertWellFormed(graph: CanvasGraph): void {
  const ids = new Set<string>();
  for (const node of graph.nodes) {
    if (ids.has(node.nodeId)) {
      throw new GraphInvariantError(`duplicate node id '${node.nodeId}'`);
    }
    ids.add(node.nodeId);
  }
  for (const edge of graph.edges) {
    if (!ids.has(edge.fromNodeId) || !ids.has(edge.toNodeId)) {
      throw new GraphInvariantError(
        `edge ${edge.fromNodeId} -> ${edge.toNodeId} references a missing node`,
      );
    }
  }
}

/** Return one directed cycle as a node id list, or null when acyclic. */
export function findCycle(graph: CanvasGraph): string[] | null {
  const adjacency = new Map<string, string[]>();
  for (const node of graph.nodes) adjacency.set(node.nodeId, []);
  for (const edge of graph.edges) adjacency.get(edge.fromNodeId)?.push(edge.toNodeId);

  const color = new Map<string, 'active' | 'done'>();
  const parent = new Map<string, string>();

  for (const node of graph.nodes) {
    if (color.has(node.nodeId)) continue;
    const stack: Array<{ id: string; next: number }> = [{ id: node.nodeId, next: 0 }];
    color.set(node.nodeId, 'active');
    while (stack.length > 0) {
      const frame = stack[stack.length - 1];
      const targets = adjacency.get(frame.id) ?? [];
      if (frame.next >= targets.length) {
        color.set(frame.id, 'done');
        stack.pop();
        continue;
      }
      const target = targets[frame.next];
      frame.next += 1;
      if (color.get(target) === 'active') {
        const cycle = [target];
        let cursor = frame.id;
        while (cursor !== target) {
          cycle.push(cursor);
          cursor = parent.get(cursor)!;
        }
        cycle.reverse();
        return cycle;
      }
      if (!color.has(target)) {
        color.set(target, 'active');
        parent.set(target, frame.id);
        stack.push({ id: target, next: 0 });
      }
    }
  }
  return null;
}

/** Serialize the canvas to the workflow wire document plus layout metadata.
 *
 * Deterministic: tasks are ordered by nodeId and dependsOn is the sorted
 * set of incoming-edge sources, so the same drawing always produces the
 * same JSON regardless of the order nodes and edges were added. */
export function graphToWorkflowSpec(
  graph: CanvasGraph,
  name: string,
  owner: string,
  runAt?: string,
): { spec: WorkflowSpec; layout: CanvasLayout } {
  if (graph.nodes.length === 0) throw new EmptyCanvas();
  assertWellFormed(graph);
  const cycle = findCycle(graph);
  if (cycle !== null) throw new ClientCycleDetected(cycle);

  const incoming = new Map<string, Set<string>>();
  for (const node of graph.nodes) incoming.set(node.nodeId, new Set());
  for (const edge of graph.edges) incoming.get(edge.toNodeId)!.add(edge.fromNodeId);

  const ordered = [...graph.nodes].sort((a, b) => a.nodeId.localeCompare(b.nodeId));
  const tasks: TaskSpec[] = ordered.map((node) => ({
    id: node.nodeId,
    tool: node.toolName,
    action: node.actionName,
    args: { ...node.configValues },
    dependsOn: [...incoming.get(node.nodeId)!].sort(),
  }));

  const layout: CanvasLayout = { positions: {} };
  for (const node of ordered) {
    layout.positions[node.nodeId] = { ...node.position };
  }

  const spec: WorkflowSpec = {
    name,
    owner,
    schedule: runAt === undefined ? {} : { runAt },
    tasks,
  };
  return { spec, layout };
}

/** Rebuild a canvas from a stored workflow and (optionally) its layout.
 * Nodes without a saved position fall back to a simple grid. */
export function workflowToGraph(spec: WorkflowSpec, layout?: CanvasLayout): CanvasGraph {
  const nodes: CanvasNode[] = spec.tasks.map((task, index) => ({
    nodeId: task.id,
    toolName: task.tool,
    actionName: task.action,
    position: layout?.positions[task.id]
      ? { ...layout.positions[task.id] }
      : { x: 80 + (index % 4) * 180, y: 80 + Math.floor(index / 4) * 140 },
    configValues: { ...task.args },
  }));
  const edges: CanvasEdge[] = [];
  for (const task of spec.tasks) {
    for (const dep of task.dependsOn) {
      edges.push({ fromNodeId: dep, toNodeId: task.id });
    }
  }
  return { nodes, edges };
}

/** Node ids with a path to `nodeId`, i.e. the candidates for upstream
 * output references in its config form. */
export function upstreamOf(graph: CanvasGraph, nodeId: string): string[] {
  const reverse = new Map<string, string[]>();
  for (const edge of graph.edges) {
    const list = reverse.get(edge.toNodeId) ?? [];
    list.push(edge.fromNodeId);
    reverse.set(edge.toNodeId, list);
  }
  const reached = new Set<string>();
  const queue = [...(reverse.get(nodeId) ?? [])];
  while (queue.length > 0) {
    const current = queue.pop()!;
    if (reached.has(current)) continue;
    reached.add(current);
    queue.push(...(reverse.get(current) ?? []));
  }
  return [...reached].sort();
}
