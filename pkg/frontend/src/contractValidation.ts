/** Client-side mirror of the server's contract validation. Advisory only:
 * the server re-validates every submission. Error paths use the same
 * dotted/indexed syntax as the server's fieldErrors so both sources render
 * against the same wizard controls. */

import type { FieldError, ValueType } from './types.js';

const NAME_RE = /^[A-Za-z0-9_-]{1,64}$/;
const PLACEHOLDER_RE = /\{([^{}/]+)\}/g;

const TOP_KEYS = ['name', 'description', 'author', 'access', 'createdAt'];
const ACCESS_KEYS = ['kind', 'api', 'library'];
const API_KEYS = ['baseUrl', 'endpoints'];
const LIBRARY_KEYS = ['program', 'commands'];
const ENDPOINT_KEYS = ['name', 'path', 'method', 'allowedHeaders', 'bodyFields', 'queryFields'];
const COMMAND_KEYS = ['name', 'subcommand', 'params', 'outputMode', 'outputFileParam'];
const PARAM_KEYS = ['name', 'flag', 'valueType', 'required', 'default', 'allowedValues'];
const METHODS = ['GET', 'POST', 'PUT', 'DELETE'];
const VALUE_TYPES = ['string', 'int', 'float', 'bool', 'file'];

type Obj = Record<string, unknown>;

function isObject(value: unknown): value is Obj {
  return typeof value === 'object' && value !== null && !Array.isArray(value);
}

function checkUnknownKeys(doc: Obj, allowed: string[], base: string, errors: FieldError[]): void {
  for (const key of Object.keys(doc)) {
    if (!allowed.includes(key)) {
      const path = base ? `${base}.${key}` : key;
      errors.push({ path, reason: 'unknown field' });
    }
  }
}

function valueMatchesType(value: unknown, valueType: ValueType): boolean {
  switch (valueType) {
    case 'string':
    case 'file':
      return typeof value === 'string';
    case 'int':
      return typeof value === 'number' && Number.isInteger(value);
    case 'float':
      return typeof value === 'number';
    case 'bool':
      return typeof value === 'boolean';
  }
}

function checkParamRules(params: unknown, base: string, errors: FieldError[]): void {
  if (!Array.isArray(params)) {
    if (params !== undefined) errors.push({ path: base, reason: 'must be a list' });
    return;
  }
  const seen = new Set<string>();
  params.forEach((raw, i) => {
    const path = `${base}[${i}]`;
    if (!isObject(raw)) {
      errors.push({ path, reason: 'must be an object' });
      return;
    }
    checkUnknownKeys(raw, PARAM_KEYS, path, errors);
    const name = raw.name;
    if (typeof name !== 'string' || !NAME_RE.test(name)) {
      errors.push({ path: `${path}.name`, reason: 'param name must match [A-Za-z0-9_-]{1,64}' });
    } else {
      if (seen.has(name)) errors.push({ path: `${path}.name`, reason: `duplicate param name '${name}'` });
      seen.add(name);
    }
    const valueType = raw.valueType;
    if (typeof valueType !== 'string' || !VALUE_TYPES.includes(valueType)) {
      errors.push({ path: `${path}.valueType`, reason: `must be one of ${VALUE_TYPES.join(', ')}` });
      return;
    }
    const vt = valueType as ValueType;
    if (raw.required === true && raw.default !== undefined && raw.default !== null) {
      errors.push({ path: `${path}.default`, reason: 'required params have no default' });
    }
    if (raw.default !== undefined && raw.default !== null && !valueMatchesType(raw.default, vt)) {
      errors.push({ path: `${path}.default`, reason: `default does not match valueType ${vt}` });
    }
    if (raw.allowedValues !== undefined && raw.allowedValues !== null) {
      if (!Array.isArray(raw.allowedValues)) {
        errors.push({ path: `${path}.allowedValues`, reason: 'must be a list' });
      } else {
        raw.allowedValues.forEach((v, j) => {
          if (!valueMatchesType(v, vt)) {
            errors.push({
              path: `${path}.allowedValues[${j}]`,
              reason: `value does not match valueType ${vt}`,
            });
          }
        });
        if (
          raw.default !== undefined &&
          raw.default !== null &&
          !raw.allowedValues.includes(raw.default)
        ) {
          errors.push({ path: `${path}.default`, reason: 'default must be a member of allowedValues' });
        }
      }
    }
  });
}

function paramNames(list: unknown): string[] {
  if (!Array.isArray(list)) return [];
  return list.filter(isObject).map((p) => String(p.name ?? ''));
}

function checkApi(api: Obj, errors: FieldError[]): void {
  checkUnknownKeys(api, API_KEYS, 'access.api', errors);
  const baseUrl = api.baseUrl;
  let parsedOk = false;
  if (typeof baseUrl === 'string') {
    try {
      const url = new URL(baseUrl);
      parsedOk = url.protocol === 'http:' || url.protocol === 'https:';
    } catch {
      parsedOk = false;
    }
  }
  if (!parsedOk) {
    errors.push({ path: 'access.api.baseUrl', reason: 'must be an absolute http(s) URL' });
  }
  const endpoints = api.endpoints;
  if (!Array.isArray(endpoints) || endpoints.length === 0) {
    errors.push({ path: 'access.api.endpoints', reason: 'at least one endpoint is required' });
    return;
  }
  const seen = new Set<string>();
  endpoints.forEach((raw, i) => {
    const path = `access.api.endpoints[${i}]`;
    if (!isObject(raw)) {
      errors.push({ path, reason: 'must be an object' });
      return;
    }
    checkUnknownKeys(raw, ENDPOINT_KEYS, path, errors);
    const name = raw.name;
    if (typeof name !== 'string' || !NAME_RE.test(name)) {
      errors.push({ path: `${path}.name`, reason: 'endpoint name must match [A-Za-z0-9_-]{1,64}' });
    } else {
      if (seen.has(name)) errors.push({ path: `${path}.name`, reason: `duplicate endpoint name '${name}'` });
      seen.add(name);
    }
    if (typeof raw.method !== 'string' || !METHODS.includes(raw.method)) {
      errors.push({ path: `${path}.method`, reason: `must be one of ${METHODS.join(', ')}` });
    }
    const declared = new Set([...paramNames(raw.bodyFields), ...paramNames(raw.queryFields)]);
    if (typeof raw.path === 'string') {
      for (const match of raw.path.matchAll(PLACEHOLDER_RE)) {
        if (!declared.has(match[1])) {
          errors.push({
            path: `${path}.path`,
            reason: `placeholder {${match[1]}} has no matching param rule`,
          });
        }
      }
    } else {
      errors.push({ path: `${path}.path`, reason: 'path is required' });
    }
    if (raw.method === 'GET' && Array.isArray(raw.bodyFields) && raw.bodyFields.length > 0) {
      errors.push({ path: `${path}.bodyFields`, reason: 'GET endpoints have empty bodyFields' });
    }
    checkParamRules(raw.bodyFields, `${path}.bodyFields`, errors);
    checkParamRules(raw.queryFields, `${path}.queryFields`, errors);
  });
}

function checkLibrary(library: Obj, errors: FieldError[]): void {
  checkUnknownKeys(library, LIBRARY_KEYS, 'access.library', errors);
  if (typeof library.program !== 'string' || library.program.length === 0) {
    errors.push({ path: 'access.library.program', reason: 'program must be nonempty' });
  }
  const commands = library.commands;
  if (!Array.isArray(commands) || commands.length === 0) {
    errors.push({ path: 'access.library.commands', reason: 'at least one command is required' });
    return;
  }
  const seen = new Set<string>();
  commands.forEach((raw, i) => {
    const path = `access.library.commands[${i}]`;
    if (!isObject(raw)) {
      errors.push({ path, reason: 'must be an object' });
      return;
    }
    checkUnknownKeys(raw, COMMAND_KEYS, path, errors);
    const name = raw.name;
    if (typeof name !== 'string' || !NAME_RE.test(name)) {
      errors.push({ path: `${path}.name`, reason: 'command name must match [A-Za-z0-9_-]{1,64}' });
    } else {
      if (seen.has(name)) errors.push({ path: `${path}.name`, reason: `duplicate command name '${name}'` });
      seen.add(name);
    }
    checkParamRules(raw.params, `${path}.params`, errors);
    const outputMode = raw.outputMode ?? 'stdout';
    if (outputMode !== 'stdout' && outputMode !== 'file') {
      errors.push({ path: `${path}.outputMode`, reason: "must be 'stdout' or 'file'" });
    } else if (outputMode === 'file') {
      const target = raw.outputFileParam;
      if (typeof target !== 'string') {
        errors.push({ path: `${path}.outputFileParam`, reason: 'required when outputMode is file' });
      } else {
        const params = Array.isArray(raw.params) ? raw.params.filter(isObject) : [];
        const match = params.find((p) => p.name === target);
        if (!match) {
          errors.push({ path: `${path}.outputFileParam`, reason: `no param named '${target}'` });
        } else if (match.valueType !== 'file') {
          errors.push({ path: `${path}.outputFileParam`, reason: 'must name a param of valueType file' });
        }
      }
    } else if (raw.outputFileParam !== undefined && raw.outputFileParam !== null) {
      errors.push({ path: `${path}.outputFileParam`, reason: 'only valid when outputMode is file' });
    }
  });
}

/** Validate a contract document exactly as the server will; returns every
 * violation with its field path, or [] when the contract is submittable. */
export function validateContract(doc: unknown): FieldError[] {
  const errors: FieldError[] = [];
  if (!isObject(doc)) {
    return [{ path: '<root>', reason: 'document must be a JSON object' }];
  }
  checkUnknownKeys(doc, TOP_KEYS, '', errors);
  if (typeof doc.name !== 'string' || !NAME_RE.test(doc.name)) {
    errors.push({ path: 'name', reason: 'name must match [A-Za-z0-9_-]{1,64}' });
  }
  const access = doc.access;
  if (!isObject(access)) {
    errors.push({ path: 'access', reason: 'access is required' });
    return errors;
  }
  checkUnknownKeys(access, ACCESS_KEYS, 'access', errors);
  if (access.kind !== 'api' && access.kind !== 'library') {
    errors.push({ path: 'access.kind', reason: "kind must be 'api' or 'library'" });
  }
  const hasApi = access.api !== undefined && access.api !== null;
  const hasLibrary = access.library !== undefined && access.library !== null;
  if (hasApi === hasLibrary) {
    errors.push({ path: 'access', reason: 'exactly one access kind must be defined (api xor library)' });
  } else if (access.kind === 'api' && !hasApi) {
    errors.push({ path: 'access', reason: 'kind is api but access.api is missing' });
  } else if (access.kind === 'library' && !hasLibrary) {
    errors.push({ path: 'access', reason: 'kind is library but access.library is missing' });
  } else if (hasApi && isObject(access.api)) {
    checkApi(access.api, errors);
  } else if (hasLibrary && isObject(access.library)) {
    checkLibrary(access.library, errors);
  }
  return errors;
}
