/** Browser entry point. Wires the tool list, contract wizard, whiteboard,
 * and run view onto the static shell in index.html. All state mutations go
 * through the server and re-render from its responses. */

import { FlowvizClient, ServerError } from './api.js';
import { validateContract } from './contractValidation.js';
import {
  ClientCycleDetected,
  EmptyCanvas,
  graphToWorkflowSpec,
  upstreamOf,
  workflowToGraph,
} from './graph.js';
import type { CanvasGraph, CanvasLayout, CanvasNode } from './graph.js';
import { formFromRules, wizardErrorSummary } from './forms.js';
import { RunPoller } from './results.js';
import type { RunView } from './results.js';
import type { FieldError, ToolContract } from './types.js';

const LAYOUT_KEY = 'flowviz-ui.layouts';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function savedLayouts(): Record<string, CanvasLayout> {
  try {
    return JSON.parse(localStorage.getItem(LAYOUT_KEY) ?? '{}');
  } catch {
    return {};
  }
}

function saveLayout(workflowName: string, layout: CanvasLayout): void {
  const all = savedLayouts();
  all[workflowName] = layout;
  localStorage.setItem(LAYOUT_KEY, JSON.stringify(all));
}

class App {
  client: FlowvizClient;
  graph: CanvasGraph = { nodes: [], edges: [] };
  tools = new Map<string, ToolContract>();
  selectedNode: string | null = null;
  poller: RunPoller | null = null;
  nextNodeNum = 1;

  constructor() {
    const base = `${location.protocol}//${location.hostname}:${
      new URLSearchParams(location.search).get('port') ?? '8321'
    }`;
    this.client = new FlowvizClient(base);
  }

  async init(): Promise<void> {
    el<HTMLInputElement>('token').addEventListener('change', (ev) => {
      this.client.token = (ev.target as HTMLInputElement).value || null;
    });
    el<HTMLButtonElement>('contract-validate').addEventListener('click', () => this.checkContract());
    el<HTMLButtonElement>('contract-submit').addEventListener('click', () => void this.submitContract());
    el<HTMLButtonElement>('node-add').addEventListener('click', () => this.addNode());
    el<HTMLButtonElement>('edge-add').addEventListener('click', () => this.addEdge());
    el<HTMLButtonElement>('wf-submit').addEventListener('click', () => void this.submitWorkflow());
    el<HTMLButtonElement>('wf-load').addEventListener('click', () => void this.loadWorkflow());
    el<HTMLButtonElement>('run-trigger').addEventListener('click', () => void this.triggerRun());
    await this.refreshTools();
  }

  async refreshTools(): Promise<void> {
    const summaries = await this.client.listTools();
    this.tools.clear();
    const list = el<HTMLUListElement>('tool-list');
    list.innerHTML = '';
    for (const summary of summaries) {
      const contract = await this.client.getTool(summary.name);
      this.tools.set(summary.name, contract);
      const item = document.createElement('li');
      item.textContent = `${summary.name} (${summary.kind})`;
      list.appendChild(item);
    }
  }

  private contractDocument(): unknown {
    return JSON.parse(el<HTMLTextAreaElement>('contract-json').value);
  }

  checkContract(): FieldError[] {
    let errors: FieldError[];
    try {
      errors = validateContract(this.contractDocument());
    } catch {
      errors = [{ path: '<root>', reason: 'not valid JSON' }];
    }
    this.renderContractErrors(errors);
    el<HTMLButtonElement>('contract-submit').disabled = errors.length > 0;
    return errors;
  }

  renderContractErrors(errors: FieldError[]): void {
    const grouped = wizardErrorSummary(errors);
    for (const step of ['general', 'access', 'rules'] as const) {
      const pane = el<HTMLElement>(`wizard-${step}`);
      pane.classList.toggle('has-errors', grouped[step].length > 0);
      pane.querySelector('.errors')!.textContent = grouped[step]
        .map((e) => `${e.path}: ${e.reason}`)
        .join('\n');
    }
  }

  async submitContract(): Promise<void> {
    if (this.checkContract().length > 0) return;
    try {
      await this.client.registerTool(this.contractDocument() as ToolContract);
      await this.refreshTools();
      el<HTMLElement>('contract-status').textContent = 'registered';
    } catch (err) {
      if (err instanceof ServerError && err.error.fieldErrors) {
        this.renderContractErrors(err.error.fieldErrors);
      }
      el<HTMLElement>('contract-status').textContent =
        err instanceof Error ? err.message : String(err);
    }
  }

  addNode(): void {
    const toolName = el<HTMLInputElement>('node-tool').value;
    const actionName = el<HTMLInputElement>('node-action').value;
    const nodeId = el<HTMLInputElement>('node-id').value || `n${this.nextNodeNum++}`;
    const node: CanvasNode = {
      nodeId,
      toolName,
      actionName,
      position: { x: 60 + this.graph.nodes.length * 40, y: 60 + this.graph.nodes.length * 40 },
      configValues: {},
    };
    this.graph.nodes.push(node);
    this.renderGraph();
  }

  addEdge(): void {
    const from = el<HTMLInputElement>('edge-from').value;
    const to = el<HTMLInputElement>('edge-to').value;
    this.graph.edges.push({ fromNodeId: from, toNodeId: to });
    this.renderGraph();
  }

  renderGraph(): void {
    const board = el<HTMLElement>('whiteboard');
    board.innerHTML = '';
    for (const node of this.graph.nodes) {
      const box = document.createElement('div');
      box.className = 'node';
      box.style.left = `${node.position.x}px`;
      box.style.top = `${node.position.y}px`;
      box.textContent = `${node.nodeId}: ${node.toolName}/${node.actionName}`;
      box.addEventListener('click', () => this.selectNode(node.nodeId));
      board.appendChild(box);
    }
    el<HTMLElement>('edge-list').textContent = this.graph.edges
      .map((e) => `${e.fromNodeId} -> ${e.toNodeId}`)
      .join('\n');
  }

  selectNode(nodeId: string): void {
    this.selectedNode = nodeId;
    const node = this.graph.nodes.find((n) => n.nodeId === nodeId);
    if (!node) return;
    const contract = this.tools.get(node.toolName);
    const pane = el<HTMLElement>('node-config');
    pane.innerHTML = '';
    if (!contract) {
      pane.textContent = `tool '${node.toolName}' is not registered`;
      return;
    }
    const model = formFromRules(contract, node.actionName, upstreamOf(this.graph, nodeId));
    for (const field of model.fields) {
      const row = document.createElement('label');
      row.textContent = field.name + (field.required ? ' *' : '');
      let input: HTMLInputElement | HTMLSelectElement;
      if (field.control === 'select') {
        input = document.createElement('select');
        for (const option of field.options ?? []) {
          const opt = document.createElement('option');
          opt.value = String(option);
          opt.textContent = String(option);
          input.appendChild(opt);
        }
      } else if (field.control === 'fileInput' && field.referenceChoices.length > 0) {
        input = document.createElement('select');
        for (const choice of ['', ...field.referenceChoices]) {
          const opt = document.createElement('option');
          opt.value = choice;
          opt.textContent = choice || '(literal path below)';
          input.appendChild(opt);
        }
      } else {
        input = document.createElement('input');
        input.type = field.control === 'toggle' ? 'checkbox' : field.control === 'number' ? 'number' : 'text';
      }
      input.addEventListener('change', () => {
        const value =
          input instanceof HTMLInputElement && input.type === 'checkbox'
            ? input.checked
            : field.control === 'number'
              ? Number((input as HTMLInputElement).value)
              : input.value;
        if (value === '' || value === false) delete node.configValues[field.name];
        else node.configValues[field.name] = value;
      });
      row.appendChild(input);
      pane.appendChild(row);
    }
  }

  async submitWorkflow(): Promise<void> {
    const name = el<HTMLInputElement>('wf-name').value;
    const owner = el<HTMLInputElement>('wf-owner').value;
    const status = el<HTMLElement>('wf-status');
    try {
      const { spec, layout } = graphToWorkflowSpec(this.graph, name, owner);
      await this.client.createWorkflow(spec);
      saveLayout(name, layout);
      status.textContent = `workflow '${name}' saved`;
    } catch (err) {
      if (err instanceof EmptyCanvas || err instanceof ClientCycleDetected) {
        status.textContent = err.message;
        return;
      }
      status.textContent = err instanceof Error ? err.message : String(err);
    }
  }

  async loadWorkflow(): Promise<void> {
    const name = el<HTMLInputElement>('wf-name').value;
    const spec = await this.client.getWorkflow(name);
    this.graph = workflowToGraph(spec, savedLayouts()[name]);
    this.renderGraph();
  }

  async triggerRun(): Promise<void> {
    const name = el<HTMLInputElement>('wf-name').value;
    const record = await this.client.triggerRun(name);
    this.poller?.stop();
    this.poller = new RunPoller(this.client, record.runId, (view) => this.renderRun(view));
    await this.poller.start();
  }

  renderRun(view: RunView): void {
    el<HTMLElement>('run-state').textContent = `${view.runId}: ${view.state}`;
    const rows = el<HTMLElement>('run-tasks');
    rows.innerHTML = '';
    for (const task of view.tasks) {
      const row = document.createElement('div');
      row.className = `task task-${task.state.toLowerCase()}`;
      row.textContent = `${task.taskId}: ${task.state}`;
      row.addEventListener('click', () => void this.poller?.loadLog(task.taskId));
      if (task.log !== null) {
        const pre = document.createElement('pre');
        pre.textContent = task.log;
        row.appendChild(pre);
      }
      rows.appendChild(row);
    }
    el<HTMLElement>('run-dsl').textContent = view.dslSource;
  }
}

window.addEventListener('DOMContentLoaded', () => {
  void new App().init();
});
