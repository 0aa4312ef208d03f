#![allow(dead_code)]

use footprint_core::targets::PolygonRing;
use rand::Rng;

/// 20 axis-aligned buildings on a 5x4 grid of 30-px cells. Sides are 16..=24
/// and offsets keep at least 3 px between neighbors.
pub fn synthetic_city<R: Rng>(rng: &mut R) -> (Vec<PolygonRing>, usize, usize) {
    const CELL: usize = 30;
    let mut rings = Vec::new();
    for gr in 0..4 {
        for gc in 0..5 {
            let h = rng.gen_range(16..=24);
            let w = rng.gen_range(16..=24);
            let r0 = gr * CELL + rng.gen_range(0..=CELL - 3 - h);
            let c0 = gc * CELL + rng.gen_range(0..=CELL - 3 - w);
            rings.push(PolygonRing::rect(
                c0 as f64,
                r0 as f64,
                (c0 + w) as f64,
                (r0 + h) as f64,
            ));
        }
    }
    (rings, 4 * CELL, 5 * CELL)
}

pub fn annotation_json(images: &[(String, Vec<PolygonRing>)]) -> String {
    let mut map = serde_json::Map::new();
    for (id, rings) in images {
        let polys: Vec<serde_json::Value> = rings
            .iter()
            .map(|r| serde_json::json!({ "points": r.vertices.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>() }))
            .collect();
        map.insert(id.clone(), serde_json::Value::Array(polys));
    }
    serde_json::to_string_pretty(&map).unwrap()
}

pub fn cli(args: &[&str]) -> footprint_cli::CliResult<footprint_cli::RunOutput> {
    let inv =
        footprint_cli::parse_invocation(std::iter::once("footprint").chain(args.iter().copied()))?;
    footprint_cli::run_stage(&inv)
}

/// Every file under `dir` (recursively) with its bytes, keyed by relative path.
pub fn snapshot(dir: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}
