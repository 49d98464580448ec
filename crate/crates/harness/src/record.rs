//! JSON encoding of values, outcomes and test records.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde_json::{json, Map, Value as Json};

use sep_core::domain::{Signature, TestCase};
use sep_core::minilang::{ExceptionKind, ExecutionOutcome, OutcomeKind, Type, Value};

fn int_json(v: &BigInt) -> Json {
    match i64::try_from(v) {
        Ok(small) => json!(small),
        Err(_) => Json::String(v.to_string()),
    }
}

fn json_int(j: &Json) -> Result<BigInt, String> {
    match j {
        Json::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| format!("{n} is not an integer")),
        Json::String(s) => s.parse().map_err(|_| format!("`{s}` is not an integer")),
        other => Err(format!("expected an integer, found {other}")),
    }
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => int_json(i),
        Value::Bool(b) => Json::Bool(*b),
        Value::IntArray(items) => Json::Array(items.iter().map(int_json).collect()),
        Value::Unit => Json::Null,
    }
}

pub fn value_from_json(j: &Json, ty: Type) -> Result<Value, String> {
    match (ty, j) {
        (Type::Int, _) => json_int(j).map(Value::Int),
        (Type::Bool, Json::Bool(b)) => Ok(Value::Bool(*b)),
        (Type::IntArray, Json::Array(items)) => items
            .iter()
            .map(json_int)
            .collect::<Result<_, _>>()
            .map(Value::IntArray),
        (Type::Unit, Json::Null) => Ok(Value::Unit),
        (ty, other) => Err(format!("expected a value of type {ty}, found {other}")),
    }
}

pub fn outcome_to_json(o: &ExecutionOutcome, sig: &Signature) -> Json {
    let mut m = Map::new();
    match &o.kind {
        OutcomeKind::Return(v) => {
            m.insert("kind".into(), json!("return"));
            m.insert("value".into(), value_to_json(v));
        }
        OutcomeKind::Exception(k) => {
            m.insert("kind".into(), json!("exception"));
            m.insert("exception_kind".into(), json!(k.name()));
        }
        OutcomeKind::ResourceExhausted => {
            m.insert("kind".into(), json!("resource_exhausted"));
        }
    }
    if !o.mutated_inputs.is_empty() {
        let mutated: Map<String, Json> = o
            .mutated_inputs
            .iter()
            .map(|(&pos, items)| {
                (
                    sig.params[pos].name.clone(),
                    Json::Array(items.iter().map(int_json).collect()),
                )
            })
            .collect();
        m.insert("mutated".into(), Json::Object(mutated));
    }
    Json::Object(m)
}

/// Array parameters missing from `mutated` keep their argument contents.
pub fn outcome_from_json(j: &Json, sig: &Signature, args: &[Value]) -> Result<ExecutionOutcome, String> {
    let obj = j.as_object().ok_or("expected outcome must be an object")?;
    let kind = match obj.get("kind").and_then(Json::as_str) {
        Some("return") => {
            let v = obj.get("value").unwrap_or(&Json::Null);
            OutcomeKind::Return(value_from_json(v, sig.ret)?)
        }
        Some("exception") => {
            let name = obj
                .get("exception_kind")
                .and_then(Json::as_str)
                .ok_or("exception outcome without `exception_kind`")?;
            OutcomeKind::Exception(
                ExceptionKind::from_name(name).ok_or_else(|| format!("unknown exception kind `{name}`"))?,
            )
        }
        Some("resource_exhausted") => OutcomeKind::ResourceExhausted,
        Some(other) => return Err(format!("unknown outcome kind `{other}`")),
        None => return Err("outcome without `kind`".into()),
    };
    let given = match obj.get("mutated") {
        None | Some(Json::Null) => Map::new(),
        Some(Json::Object(m)) => m.clone(),
        Some(other) => return Err(format!("`mutated` must be an object, found {other}")),
    };
    for name in given.keys() {
        if !sig.array_params().any(|p| &p.name == name) {
            return Err(format!("`mutated` names `{name}`, which is not an array parameter"));
        }
    }
    let mut mutated_inputs = BTreeMap::new();
    for (pos, p) in sig.params.iter().enumerate() {
        if p.ty != Type::IntArray {
            continue;
        }
        let items = match given.get(&p.name) {
            Some(Json::Array(items)) => items.iter().map(json_int).collect::<Result<_, _>>()?,
            Some(other) => return Err(format!("`mutated.{}` must be an array, found {other}", p.name)),
            None => match &args[pos] {
                Value::IntArray(items) => items.clone(),
                _ => unreachable!("arguments are type-checked first"),
            },
        };
        mutated_inputs.insert(pos, items);
    }
    Ok(ExecutionOutcome {
        kind,
        mutated_inputs,
    })
}

pub fn test_to_json(t: &TestCase, sig: &Signature) -> Json {
    json!({
        "args": t.args.iter().map(value_to_json).collect::<Vec<_>>(),
        "expected": outcome_to_json(&t.expected, sig),
    })
}

pub fn test_from_json(j: &Json, sig: &Signature) -> Result<TestCase, String> {
    let args_json = j
        .get("args")
        .and_then(Json::as_array)
        .ok_or("test record without an `args` array")?;
    if args_json.len() != sig.params.len() {
        return Err(format!(
            "test record has {} arguments, signature takes {}",
            args_json.len(),
            sig.params.len()
        ));
    }
    let args = args_json
        .iter()
        .zip(&sig.params)
        .map(|(a, p)| value_from_json(a, p.ty))
        .collect::<Result<Vec<_>, _>>()?;
    let expected = outcome_from_json(
        j.get("expected").ok_or("test record without `expected`")?,
        sig,
        &args,
    )?;
    Ok(TestCase { args, expected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sep_core::minilang::Param;

    fn sig() -> Signature {
        Signature {
            name: "f".into(),
            params: vec![
                Param {
                    name: "a".into(),
                    ty: Type::IntArray,
                },
                Param {
                    name: "k".into(),
                    ty: Type::Int,
                },
            ],
            ret: Type::Unit,
        }
    }

    #[test]
    fn round_trip() {
        let s = sig();
        let t = TestCase {
            args: vec![Value::array([1, 2]), Value::Int(BigInt::from(10).pow(30))],
            expected: ExecutionOutcome::returned(Value::Unit).with_mutated(0, vec![2.into(), 3.into()]),
        };
        let j = test_to_json(&t, &s);
        assert_eq!(j["args"][1], json!("1000000000000000000000000000000"));
        assert_eq!(j["expected"]["mutated"]["a"], json!([2, 3]));
        assert_eq!(test_from_json(&j, &s).unwrap(), t);
    }

    #[test]
    fn missing_mutation_means_unchanged() {
        let j = json!({"args": [[4, 5], 0], "expected": {"kind": "exception", "exception_kind": "IndexOutOfBounds"}});
        let t = test_from_json(&j, &sig()).unwrap();
        assert_eq!(t.expected.mutated_inputs[&0], vec![BigInt::from(4), BigInt::from(5)]);
    }

    #[test]
    fn malformed_records() {
        let s = sig();
        assert!(test_from_json(&json!({"args": [[1]]}), &s).is_err());
        assert!(test_from_json(&json!({"args": [[1], true], "expected": {"kind": "return"}}), &s).is_err());
        assert!(test_from_json(&json!({"args": [[1], 1], "expected": {"kind": "weird"}}), &s).is_err());
        assert!(test_from_json(
            &json!({"args": [[1], 1], "expected": {"kind": "return", "mutated": {"k": [1]}}}),
            &s
        )
        .is_err());
    }
}
