//! Browser bindings. Every export takes plain strings and returns a JSON
//! string; failures come back as `{"error": "..."}`.

use entsub::combinatorics::{count_distinct_monomials, to_usize};
use entsub::decompose::{
    decompose, expected_part_sizes, extract_ges_layers, max_ces_dim, max_ges_dim, max_sym_ges_dim,
    verify, Scheme, Vectors,
};
use entsub::multirank::{format_tuple, is_gme};
use entsub::{EmbedSpec, FloatKet, Ket, LocalDims};
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest Hilbert-space dimension the page will decompose.
pub const MAX_TOTAL_DIM: usize = 256;
const PREVIEW: usize = 12;
const DEMO_TRIALS: usize = 40;
const DEMO_FRESH: usize = 8;

fn parse_dims(text: &str) -> Result<LocalDims, String> {
    let dims = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad dimension {s:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    LocalDims::new(dims).map_err(|e| e.to_string())
}

fn build_spec(dims: &str, ksub: Option<usize>) -> Result<EmbedSpec, String> {
    EmbedSpec::new(parse_dims(dims)?, ksub).map_err(|e| e.to_string())
}

fn float_ket_to_string(ket: &FloatKet) -> String {
    let terms: Vec<String> = ket
        .terms()
        .map(|(m, c)| format!("({:+.4}{:+.4}i){m}", c.re, c.im))
        .collect();
    terms.join(" + ")
}

pub fn counts_value(dims: &str, ksub: Option<usize>) -> Result<Value, String> {
    let spec = build_spec(dims, ksub)?;
    let slice = spec.dims().as_slice();
    let mut sorted = slice.to_vec();
    sorted.sort_unstable();
    let (product, ges, ces) = expected_part_sizes(&spec);
    let err = |e: entsub::Error| e.to_string();
    let (monomials, sym) = match (spec.dims().uniform(), spec.k_sub()) {
        (Some(d), Some(k)) => (
            Some(to_usize(
                &count_distinct_monomials(slice.len(), d, k).map_err(err)?,
            )),
            Some(max_sym_ges_dim(slice.len(), d).map_err(err)?),
        ),
        _ => (None, None),
    };
    Ok(json!({
        "family": spec.family().to_string(),
        "k_sub": spec.k_sub(),
        "nupb_size": spec.nupb_size(),
        "distinct_monomials": monomials,
        "parts": [product, ges, ces],
        "max_ces_dim": max_ces_dim(slice).map_err(err)?,
        "max_ges_dim": max_ges_dim(&sorted).map_err(err)?,
        "max_sym_ges_dim": sym,
    }))
}

pub fn decompose_value(
    dims: &str,
    ksub: Option<usize>,
    scheme: &str,
    seed: u64,
) -> Result<Value, String> {
    let spec = build_spec(dims, ksub)?;
    let total = spec.dims().total();
    if total > MAX_TOTAL_DIM {
        return Err(format!(
            "total dimension {total} exceeds the demo limit {MAX_TOTAL_DIM}"
        ));
    }
    let scheme: Scheme = scheme.parse().map_err(|e: entsub::Error| e.to_string())?;
    let dec = decompose(&spec, scheme, seed).map_err(|e| e.to_string())?;
    let report = verify(&dec, DEMO_TRIALS, DEMO_FRESH, seed);
    let layers = extract_ges_layers(&dec).map_err(|e| e.to_string())?;
    let sizes = layers.sizes(&dec);
    let ces_preview: Vec<String> = match &dec.ces {
        Vectors::Exact(v) => v.iter().take(PREVIEW).map(Ket::to_string).collect(),
        Vectors::Float(v) => v.iter().take(PREVIEW).map(float_ket_to_string).collect(),
    };
    let (p, g, c) = dec.part_sizes();
    Ok(json!({
        "family": spec.family().to_string(),
        "scheme": scheme.to_string(),
        "parts": [p, g, c],
        "product_part": dec.product_part.iter().map(Ket::to_string).collect::<Vec<_>>(),
        "ges_basis": dec.ges_basis.iter().map(Ket::to_string).collect::<Vec<_>>(),
        "ces_preview": ces_preview,
        "layers": format_tuple(&sizes),
        "verified": report.passed(),
        "failed_checks": report.failed_checks(),
    }))
}

pub fn multirank_value(dims: &str, state: &str) -> Result<Value, String> {
    let psi = Ket::parse(parse_dims(dims)?, state).map_err(|e| e.to_string())?;
    let report = is_gme(&psi).map_err(|e| e.to_string())?;
    let n = psi.dims().n();
    let multiranks: Vec<Value> = (1..=n / 2)
        .map(|l| {
            let sites: Vec<String> = report.per_ell[l - 1]
                .iter()
                .map(|(p, _)| p.to_string())
                .collect();
            json!({ "ell": l, "ranks": format_tuple(&report.ranks(l)), "sites": sites })
        })
        .collect();
    Ok(json!({
        "state": psi.to_string(),
        "gme": report.gme,
        "multiranks": multiranks,
        "witness": report.witness().map(|p| p.to_string()),
    }))
}

fn render(result: Result<Value, String>) -> String {
    result.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

fn optional(ksub: i32) -> Option<usize> {
    usize::try_from(ksub).ok()
}

/// Dimension counts and bounds; a negative `ksub` selects the default.
#[wasm_bindgen]
pub fn counts(dims: &str, ksub: i32) -> String {
    render(counts_value(dims, optional(ksub)))
}

#[wasm_bindgen]
pub fn decompose_summary(dims: &str, ksub: i32, scheme: &str, seed: u32) -> String {
    render(decompose_value(
        dims,
        optional(ksub),
        scheme,
        u64::from(seed),
    ))
}

#[wasm_bindgen]
pub fn multirank(dims: &str, state: &str) -> String {
    render(multirank_value(dims, state))
}
