/** Form models for the two data-entry surfaces: per-task config forms on
 * the whiteboard (one input per ParamRule) and the three-step contract
 * wizard (general / access / rules). */

import type { FieldError, ParamRule, ToolContract } from './types.js';

export class UnknownAction extends Error {
  constructor(tool: string, action: string) {
    super(`tool '${tool}' has no action '${action}'`);
    this.name = 'UnknownAction';
  }
}

export type ControlKind = 'text' | 'number' | 'toggle' | 'select' | 'fileInput';

export interface FormField {
  name: string;
  control: ControlKind;
  required: boolean;
  defaultValue: unknown;
  /** Fixed choices when the rule carries allowedValues. */
  options: unknown[] | null;
  /** For file params: `${task.<id>.output}` references the user may pick.
   * Empty when the node has no upstream tasks (literal path only). */
  referenceChoices: string[];
  /** True for api header inputs, which bypass ParamRule typing. */
  isHeader: boolean;
}

export interface FormModel {
  tool: string;
  action: string;
  fields: FormField[];
}

function controlFor(rule: ParamRule): ControlKind {
  if (rule.allowedValues && rule.allowedValues.length > 0) return 'select';
  switch (rule.valueType) {
    case 'bool':
      return 'toggle';
    case 'int':
    case 'float':
      return 'number';
    case 'file':
      return 'fileInput';
    default:
      return 'text';
  }
}

function fieldFromRule(rule: ParamRule, upstreamIds: string[]): FormField {
  const isFile = rule.valueType === 'file';
  return {
    name: rule.name,
    control: controlFor(rule),
    required: rule.required === true,
    defaultValue: rule.default ?? (rule.valueType === 'bool' ? false : null),
    options: rule.allowedValues && rule.allowedValues.length > 0 ? [...rule.allowedValues] : null,
    referenceChoices: isFile ? upstreamIds.map((id) => `\${task.${id}.output}`) : [],
    isHeader: false,
  };
}

/** Build the config form for (tool, action). `upstreamIds` are the node ids
 * reachable upstream of the node being configured; only those are offered
 * as output references. */
export function formFromRules(
  tool: ToolContract,
  action: string,
  upstreamIds: string[] = [],
): FormModel {
  const upstream = [...upstreamIds].sort();
  if (tool.access.kind === 'library') {
    const command = tool.access.library?.commands.find((c) => c.name === action);
    if (!command) throw new UnknownAction(tool.name, action);
    return {
      tool: tool.name,
      action,
      fields: (command.params ?? []).map((rule) => fieldFromRule(rule, upstream)),
    };
  }
  const endpoint = tool.access.api?.endpoints.find((e) => e.name === action);
  if (!endpoint) throw new UnknownAction(tool.name, action);
  const fields = [
    ...(endpoint.bodyFields ?? []).map((rule) => fieldFromRule(rule, upstream)),
    ...(endpoint.queryFields ?? []).map((rule) => fieldFromRule(rule, upstream)),
  ];
  for (const header of endpoint.allowedHeaders ?? []) {
    fields.push({
      name: header,
      control: 'text',
      required: false,
      defaultValue: null,
      options: null,
      referenceChoices: [],
      isHeader: true,
    });
  }
  return { tool: tool.name, action, fields };
}

export type WizardStep = 'general' | 'access' | 'rules';

export interface WizardTarget {
  step: WizardStep;
  /** Stable control id the wizard renders; error badges attach to it. */
  controlId: string;
}

/** Route a validation error path (client- or server-produced, same syntax)
 * to the wizard step and control that should display it. Param-rule paths
 * land on the rules step; everything else under access on the access step;
 * top-level fields on the general step. */
export function wizardTargetFor(error: FieldError): WizardTarget {
  const path = error.path;
  const isRulePath =
    /\.(params|bodyFields|queryFields)\[\d+\]/.test(path) ||
    /\.(params|bodyFields|queryFields)$/.test(path) ||
    path.endsWith('.outputFileParam') ||
    path.endsWith('.outputMode');
  if (isRulePath) return { step: 'rules', controlId: path };
  if (path === 'access' || path.startsWith('access.')) {
    return { step: 'access', controlId: path };
  }
  return { step: 'general', controlId: path === '<root>' ? 'name' : path };
}

/** Group errors by wizard step for badge counts on the step headers. */
export function wizardErrorSummary(errors: FieldError[]): Record<WizardStep, FieldError[]> {
  const grouped: Record<WizardStep, FieldError[]> = { general: [], access: [], rules: [] };
  for (const error of errors) {
    grouped[wizardTargetFor(error).step].push(error);
  }
  return grouped;
}
