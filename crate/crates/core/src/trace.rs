//! Stable trace export. Two forms:
//!
//! * text: one `step=<n> kind=<k> ...` line per event, human oriented;
//! * records: one JSON object per line with exactly the fields
//!   `{step, kind, args}`.
//!
//! Both forms are golden-file friendly: field order is fixed and nothing
//! time- or path-dependent appears. Values encode as tagged JSON:
//! `{"t":"int","v":n}`, `{"t":"ref","v":ordinal}`, `{"t":"sym","v":name}`,
//! `{"t":"unit"}`, `{"t":"pair","fst":...,"snd":...}`.

use serde_json::{json, Value as Json};

use crate::exec::{Event, EventKind};
use crate::value::Value;

/// Tagged JSON encoding of a guest value.
pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Int(n) => json!({"t": "int", "v": n}),
        Value::Ref(id) => json!({"t": "ref", "v": id.0}),
        Value::Sym(s) => json!({"t": "sym", "v": s.as_str()}),
        Value::Unit => json!({"t": "unit"}),
        Value::Pair(a, b) => json!({"t": "pair", "fst": value_json(a), "snd": value_json(b)}),
    }
}

/// One text line per event.
pub fn event_text(e: &Event) -> String {
    let body = match &e.kind {
        EventKind::Emit { value } => format!("kind=emit value={value}"),
        EventKind::Spawn { parent, child, fname } => {
            format!("kind=spawn parent=@{parent} child=@{child} fn={fname}")
        }
        EventKind::Send { src, dst, value } => {
            format!("kind=send src=@{src} dst=@{dst} value={value}")
        }
        EventKind::Recv { dst, value } => format!("kind=recv dst=@{dst} value={value}"),
        EventKind::MechOp { mech, op, party, value } => match value {
            Some(v) => format!("kind=mechop mech=@{mech} op={op} party=@{party} value={v}"),
            None => format!("kind=mechop mech=@{mech} op={op} party=@{party}"),
        },
        EventKind::ObjReq { obj, method, requester } => {
            format!("kind=objreq obj=@{obj} method={method} requester=@{requester}")
        }
        EventKind::CellOp { actor, cell, op, value } => {
            format!("kind=cellop actor=@{actor} cell={cell} op={} value={value}", op.as_str())
        }
        EventKind::Deadlock => "kind=deadlock".to_string(),
        EventKind::Halt { result } => format!("kind=halt result={result}"),
    };
    format!("step={} {body}", e.step)
}

/// One JSON record per event, with fields `{step, kind, args}`.
pub fn event_record(e: &Event) -> Json {
    let (kind, args) = match &e.kind {
        EventKind::Emit { value } => ("emit", json!({"value": value_json(value)})),
        EventKind::Spawn { parent, child, fname } => (
            "spawn",
            json!({"parent": parent.0, "child": child.0, "fn": fname.as_str()}),
        ),
        EventKind::Send { src, dst, value } => (
            "send",
            json!({"src": src.0, "dst": dst.0, "value": value_json(value)}),
        ),
        EventKind::Recv { dst, value } => {
            ("recv", json!({"dst": dst.0, "value": value_json(value)}))
        }
        EventKind::MechOp { mech, op, party, value } => (
            "mechop",
            json!({
                "mech": mech.0,
                "op": op.as_str(),
                "party": party.0,
                "value": value.as_ref().map(value_json),
            }),
        ),
        EventKind::ObjReq { obj, method, requester } => (
            "objreq",
            json!({"obj": obj.0, "method": method.as_str(), "requester": requester.0}),
        ),
        EventKind::CellOp { actor, cell, op, value } => (
            "cellop",
            json!({"actor": actor.0, "cell": cell, "op": op.as_str(), "value": value}),
        ),
        EventKind::Deadlock => ("deadlock", json!({})),
        EventKind::Halt { result } => ("halt", json!({"result": value_json(result)})),
    };
    json!({"step": e.step, "kind": kind, "args": args})
}

/// Full-trace text form, one line per event, trailing newline.
pub fn trace_text(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&event_text(e));
        out.push('\n');
    }
    out
}

/// Full-trace record form, one JSON object per line.
pub fn trace_records(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&event_record(e).to_string());
        out.push('\n');
    }
    out
}

/// Observable-trace text form: one `emit <value>` line per emitted value.
pub fn observable_text(values: &[Value]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&format!("emit {v}\n"));
    }
    out
}

/// Observable-trace record form.
pub fn observable_records(values: &[Value]) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&json!({"kind": "emit", "value": value_json(v)}).to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{InstanceId, Symbol};

    #[test]
    fn emit_line_shape() {
        let e = Event { step: 0, kind: EventKind::Emit { value: Value::Int(1) } };
        assert_eq!(event_text(&e), "step=0 kind=emit value=1");
    }

    #[test]
    fn record_has_fixed_fields() {
        let e = Event {
            step: 3,
            kind: EventKind::Send {
                src: InstanceId(0),
                dst: InstanceId(1),
                value: Value::pair(Value::Sym(Symbol::new("ACQ")), Value::Ref(InstanceId(2))),
            },
        };
        let rec = event_record(&e);
        assert_eq!(rec["step"], 3);
        assert_eq!(rec["kind"], "send");
        assert_eq!(rec["args"]["value"]["t"], "pair");
    }

    #[test]
    fn observable_text_lines() {
        let t = observable_text(&[Value::Int(1), Value::sym("DONE")]);
        assert_eq!(t, "emit 1\nemit :DONE\n");
    }
}
