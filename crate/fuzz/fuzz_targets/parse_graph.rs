#![no_main]

use libfuzzer_sys::fuzz_target;
use qg_core::MetricGraph;

// The graph text parser must never panic, and any graph it accepts must
// survive a render/re-parse round trip with identical structure.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(g) = MetricGraph::parse(text) else {
        return;
    };
    let again = MetricGraph::parse(&g.to_text()).expect("rendered graph must re-parse");
    assert_eq!(g.n_vertices(), again.n_vertices());
    assert_eq!(g.n_edges(), again.n_edges());
    for v in 0..g.n_vertices() {
        assert_eq!(g.vertex_id(v), again.vertex_id(v));
        assert_eq!(g.mu(v), again.mu(v));
    }
    for e in 0..g.n_edges() {
        assert_eq!(g.edge_id(e), again.edge_id(e));
        assert_eq!(g.from(e), again.from(e));
        assert_eq!(g.to(e), again.to(e));
        assert_eq!(g.length(e), again.length(e));
        assert_eq!(g.omega(e), again.omega(e));
    }
    assert_eq!(g.base(), again.base());
});
