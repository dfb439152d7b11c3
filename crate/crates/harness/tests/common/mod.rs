#![allow(dead_code)]

use serde_json::Value;

/// Checks `value` against the draft-07 keywords the summary schema uses:
/// type, const, enum, required, properties, additionalProperties, items,
/// maxItems, minimum, maximum, exclusiveMinimum, oneOf and local `$ref`.
pub fn schema_errors(root: &Value, value: &Value) -> Vec<String> {
    let mut errs = Vec::new();
    check(root, root, value, "$", &mut errs);
    errs
}

fn resolve<'a>(root: &'a Value, reference: &str) -> &'a Value {
    let path = reference.strip_prefix("#/").expect("local refs only");
    path.split('/').fold(root, |v, key| &v[key])
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64(),
        other => panic!("unsupported type {other}"),
    }
}

fn check(root: &Value, schema: &Value, v: &Value, at: &str, errs: &mut Vec<String>) {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        check(root, resolve(root, r), v, at, errs);
    }
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(s, v),
            Value::Array(a) => a.iter().any(|s| type_matches(s.as_str().unwrap(), v)),
            _ => panic!("bad type keyword"),
        };
        if !ok {
            errs.push(format!("{at}: expected type {t}, got {v}"));
            return;
        }
    }
    if let Some(c) = schema.get("const") {
        if c != v {
            errs.push(format!("{at}: expected {c}"));
        }
    }
    if let Some(Value::Array(options)) = schema.get("enum") {
        if !options.contains(v) {
            errs.push(format!("{at}: {v} not in enum"));
        }
    }
    if let Some(x) = v.as_f64() {
        if schema.get("minimum").and_then(Value::as_f64).is_some_and(|m| x < m) {
            errs.push(format!("{at}: {x} below minimum"));
        }
        if schema.get("maximum").and_then(Value::as_f64).is_some_and(|m| x > m) {
            errs.push(format!("{at}: {x} above maximum"));
        }
        if schema.get("exclusiveMinimum").and_then(Value::as_f64).is_some_and(|m| x <= m) {
            errs.push(format!("{at}: {x} not above exclusiveMinimum"));
        }
    }
    if let Some(Value::Array(options)) = schema.get("oneOf") {
        let passing = options.iter().filter(|s| schema_errors_at(root, s, v)).count();
        if passing != 1 {
            errs.push(format!("{at}: {passing} oneOf branches match"));
        }
    }
    if let Value::Object(obj) = v {
        if let Some(Value::Array(req)) = schema.get("required") {
            for key in req {
                if !obj.contains_key(key.as_str().unwrap()) {
                    errs.push(format!("{at}: missing {key}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, child) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(s) => check(root, s, child, &format!("{at}.{key}"), errs),
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errs.push(format!("{at}: unexpected key {key}"))
                }
                None => {}
            }
        }
    }
    if let Value::Array(items) = v {
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if items.len() as u64 > max {
                errs.push(format!("{at}: more than {max} items"));
            }
        }
        if let Some(s) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                check(root, s, item, &format!("{at}[{i}]"), errs);
            }
        }
    }
}

fn schema_errors_at(root: &Value, schema: &Value, v: &Value) -> bool {
    let mut errs = Vec::new();
    check(root, schema, v, "", &mut errs);
    errs.is_empty()
}

pub fn summary_schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/schema/summary.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
