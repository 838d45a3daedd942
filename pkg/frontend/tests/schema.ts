/**
 * Minimal validator for the service's published schema dialect, used by the
 * contract tests: if the Python service's schemas drift from what the UI
 * renders, these tests fail.
 */

export interface Schema {
  type: string;
  required?: string[];
  properties?: Record<string, Schema>;
  values?: Schema;
  items?: Schema;
}

export function validateSchema(obj: unknown, schema: Schema, path = '$'): void {
  switch (schema.type) {
    case 'object': {
      if (typeof obj !== 'object' || obj === null || Array.isArray(obj)) {
        throw new Error(`${path}: expected object`);
      }
      const record = obj as Record<string, unknown>;
      for (const key of schema.required ?? []) {
        if (!(key in record)) {
          throw new Error(`${path}: missing required key ${key}`);
        }
      }
      for (const [key, value] of Object.entries(record)) {
        const prop = schema.properties?.[key];
        if (prop) {
          validateSchema(value, prop, `${path}.${key}`);
        } else if (schema.values) {
          validateSchema(value, schema.values, `${path}.${key}`);
        }
      }
      return;
    }
    case 'array': {
      if (!Array.isArray(obj)) {
        throw new Error(`${path}: expected array`);
      }
      if (schema.items) {
        obj.forEach((v, i) => validateSchema(v, schema.items!, `${path}[${i}]`));
      }
      return;
    }
    case 'string':
      if (typeof obj !== 'string') throw new Error(`${path}: expected string`);
      return;
    case 'integer':
      if (typeof obj !== 'number' || !Number.isInteger(obj)) {
        throw new Error(`${path}: expected integer`);
      }
      return;
    case 'number':
      if (typeof obj !== 'number') throw new Error(`${path}: expected number`);
      return;
    case 'boolean':
      if (typeof obj !== 'boolean') throw new Error(`${path}: expected boolean`);
      return;
    default:
      throw new Error(`${path}: unknown schema type ${schema.type}`);
  }
}
