import { readFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { formFromRules, UnknownAction } from '../src/forms.js';
import type { ToolContract } from '../src/types.js';

const CONTRACTS_DIR = fileURLToPath(
  new URL('../../tests/fixtures/contracts/valid', import.meta.url),
);

function contract(name: string): ToolContract {
  return JSON.parse(readFileSync(join(CONTRACTS_DIR, `${name}.json`), 'utf8'));
}

describe('formFromRules for library tools', () => {
  it('renders one input per param rule', () => {
    const model = formFromRules(contract('treebuild'), 'infer');
    const names = model.fields.map((f) => f.name);
    expect(new Set(names).size).toBe(names.length);
    expect(names).toContain('method');
    expect(names).toContain('bootstrap');
  });

  it('renders allowedValues as a fixed-choice selector', () => {
    const model = formFromRules(contract('treebuild'), 'infer');
    const method = model.fields.find((f) => f.name === 'method')!;
    expect(method.control).toBe('select');
    expect(method.options).toEqual(['nj', 'upgma']);
  });

  it('renders bool params as a toggle defaulting to off', () => {
    const model = formFromRules(contract('treebuild'), 'infer');
    const verbose = model.fields.find((f) => f.name === 'verbose')!;
    expect(verbose.control).toBe('toggle');
    expect(verbose.defaultValue).toBe(false);
  });

  it('marks required params and carries declared defaults', () => {
    const model = formFromRules(contract('treebuild'), 'infer');
    const input = model.fields.find((f) => f.name === 'input')!;
    expect(input.required).toBe(true);
    const bootstrap = model.fields.find((f) => f.name === 'bootstrap')!;
    expect(bootstrap.required).toBe(false);
    expect(bootstrap.defaultValue).toBe(100);
  });

  it('offers upstream output references only for file params with upstream nodes', () => {
    const withUpstream = formFromRules(contract('treebuild'), 'infer', ['B', 'A']);
    const fileField = withUpstream.fields.find((f) => f.control === 'fileInput')!;
    expect(fileField.referenceChoices).toEqual(['${task.A.output}', '${task.B.output}']);

    const noUpstream = formFromRules(contract('treebuild'), 'infer', []);
    const literalOnly = noUpstream.fields.find((f) => f.name === fileField.name)!;
    expect(literalOnly.referenceChoices).toEqual([]);
  });

  it('raises UnknownAction for an unknown command', () => {
    expect(() => formFromRules(contract('treebuild'), 'nope')).toThrow(UnknownAction);
  });
});

describe('formFromRules for api tools', () => {
  it('combines body fields, query fields, and header inputs', () => {
    const model = formFromRules(contract('submitter'), 'submit');
    const names = model.fields.map((f) => f.name);
    expect(names).toContain('dataset');
    expect(names).toContain('Authorization');
    const header = model.fields.find((f) => f.name === 'Authorization')!;
    expect(header.isHeader).toBe(true);
    expect(header.control).toBe('text');
  });

  it('raises UnknownAction for an unknown endpoint', () => {
    expect(() => formFromRules(contract('pinger'), 'missing')).toThrow(UnknownAction);
  });
});
