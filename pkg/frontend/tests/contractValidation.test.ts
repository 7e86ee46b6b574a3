import { readdirSync, readFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { validateContract } from '../src/contractValidation.js';
import { wizardTargetFor } from '../src/forms.js';
import type { FieldError } from '../src/types.js';

const CONTRACTS_DIR = fileURLToPath(new URL('../../tests/fixtures/contracts', import.meta.url));
const serverReports = JSON.parse(
  readFileSync(fileURLToPath(new URL('./fixtures/server_reports.json', import.meta.url)), 'utf8'),
) as Record<string, { valid: boolean; fieldErrors: FieldError[] }>;

function fixtures(kind: 'valid' | 'invalid'): Array<[string, unknown]> {
  const dir = join(CONTRACTS_DIR, kind);
  return readdirSync(dir)
    .filter((f) => f.endsWith('.json'))
    .sort()
    .map((f) => [`${kind}/${f}`, JSON.parse(readFileSync(join(dir, f), 'utf8'))]);
}

describe('client-side contract validation', () => {
  it.each(fixtures('valid'))('accepts %s', (_name, doc) => {
    expect(validateContract(doc)).toEqual([]);
  });

  it.each(fixtures('invalid'))('flags %s before submit', (_name, doc) => {
    expect(validateContract(doc).length).toBeGreaterThan(0);
  });

  it('agrees with the server verdict on every fixture', () => {
    for (const [name, doc] of [...fixtures('valid'), ...fixtures('invalid')]) {
      const report = serverReports[name];
      expect(report, `missing server report for ${name}`).toBeDefined();
      const clientErrors = validateContract(doc);
      expect(clientErrors.length === 0, `verdict mismatch for ${name}`).toBe(report.valid);
    }
  });
});

describe('server fieldErrors map onto wizard controls', () => {
  it('every server error path has a client error on the same field', () => {
    for (const [name, doc] of fixtures('invalid')) {
      const clientPaths = new Set(validateContract(doc).map((e) => e.path));
      for (const serverError of serverReports[name].fieldErrors) {
        expect(
          clientPaths.has(serverError.path),
          `${name}: server path '${serverError.path}' not flagged client-side`,
        ).toBe(true);
      }
    }
  });

  it('every server error path resolves to a wizard step and control', () => {
    for (const [name] of fixtures('invalid')) {
      for (const serverError of serverReports[name].fieldErrors) {
        const target = wizardTargetFor(serverError);
        expect(['general', 'access', 'rules']).toContain(target.step);
        expect(target.controlId.length).toBeGreaterThan(0);
      }
    }
  });

  it('routes representative paths to the expected steps', () => {
    const cases: Array<[string, string]> = [
      ['name', 'general'],
      ['acces', 'general'],
      ['access', 'access'],
      ['access.api.baseUrl', 'access'],
      ['access.api.endpoints[0].path', 'access'],
      ['access.api.endpoints[0].bodyFields', 'rules'],
      ['access.library.commands[0].params[0].default', 'rules'],
      ['access.library.commands[0].outputFileParam', 'rules'],
    ];
    for (const [path, step] of cases) {
      expect(wizardTargetFor({ path, reason: 'x' }).step).toBe(step);
    }
  });
});
