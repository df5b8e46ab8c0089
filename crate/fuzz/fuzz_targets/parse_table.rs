#![no_main]

use libfuzzer_sys::fuzz_target;
use qg_core::func::parse_function_table;
use qg_core::generators;
use qg_core::MetricGraph;

// The input splits at the first 0xFF byte into a graph text and a function
// table; when the graph half does not parse, the table is exercised against
// a fixed fallback graph. Neither parser may panic on any input.
fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == 0xFF).unwrap_or(data.len());
    let (graph_bytes, rest) = data.split_at(split);
    let table_bytes = rest.get(1..).unwrap_or(&[]);
    let Ok(table_text) = std::str::from_utf8(table_bytes) else {
        return;
    };
    let parsed = std::str::from_utf8(graph_bytes)
        .ok()
        .and_then(|t| MetricGraph::parse(t).ok());
    let g = match parsed {
        Some(g) => g,
        None => generators::path(3).expect("fallback graph"),
    };
    if let Ok(f) = parse_function_table(&g, table_text) {
        // accepted tables must evaluate without panicking
        for v in 0..g.n_vertices() {
            let _ = f.vertex(v);
        }
        for e in 0..g.n_edges() {
            let _ = f.value(e, 0.5 * g.length(e));
        }
    }
});
