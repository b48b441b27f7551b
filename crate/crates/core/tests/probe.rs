// Temporary sizing probe; replaced by the real suites.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use schedsim_core::explore::explore_bounded;
use schedsim_core::{parse_program, run, validate, SchedulerPolicy};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn probe_all() {
    let mut entries: Vec<_> = fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "gp"))
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let text = fs::read_to_string(&path).unwrap();
        let p = match parse_program(&text) {
            Ok(p) => p,
            Err(ds) => {
                println!("{name}: PARSE ERROR {ds:?}");
                continue;
            }
        };
        let diags = validate(&p, false);
        if !diags.is_empty() {
            println!("{name}: VALIDATE {diags:?}");
            continue;
        }
        let inline = run(&p, &SchedulerPolicy::Inline, 10000, false).unwrap();
        let rr = run(&p, &SchedulerPolicy::rr(1), 10000, false).unwrap();
        let t0 = Instant::now();
        let ex = explore_bounded(&p, 200, false, 3_000_000).unwrap();
        let dt = t0.elapsed();
        println!(
            "{name}: inline={} rr1={} runs={} traces={} states={} truncated={} time={:.2?} obs_inline={:?}",
            inline.verdict.text(),
            rr.verdict.text(),
            ex.full_runs,
            ex.traces.len(),
            ex.states_visited,
            ex.truncated,
            dt,
            inline.observable().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        );
    }
}
