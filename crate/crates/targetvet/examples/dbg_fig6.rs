use std::sync::Arc;
use targetvet::fixtures;

fn main() {
    let f = fixtures::by_name("fig6").unwrap();
    let a = f.analyze().unwrap();
    let (_, ssg) = &a.ssgs[0];
    println!("reachable={} tails={:?}", ssg.reachable, ssg.tails);
    for u in &ssg.units {
        println!("unit {:?} [{:?}] {} @{} :: {}", u.id, u.track, u.method.render_search(), u.loc.line, u.text);
    }
    for e in &ssg.edges {
        println!("edge {:?} -> {:?} {:?} meta={:?}", e.from, e.to, e.kind, e.meta.as_ref().map(|m| (m.kind, m.callee.render_search())));
    }
    println!("pending={:?} unresolved={:?} invalid={:?}", ssg.pending_statics, ssg.unresolved_statics, ssg.invalid_statics);
    let results = targetvet::eval::evaluate(ssg);
    for r in &results {
        println!("result facts={:?} witness={:?}", r.facts, r.witness);
    }
    let _ = Arc::new(());
}
