//! Newick parsing, canonical forms, cluster families, induced subtrees and
//! the nested JSON view.
//!
//! `cargo run --example tree_formats -- "((lion,tiger),(dog,(wolf,fox)));"`

use hiercluster::{BinaryHierarchy, ElementId, Triplet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::env::args().nth(1).unwrap_or_else(|| "((lion,tiger),(dog,(wolf,fox)));".into());
    let h = BinaryHierarchy::from_newick(&src)?;
    println!("newick     {}", h.to_newick()?);
    println!("canonical  {}", h.canonical_form());
    for c in h.to_laminar().clusters() {
        let names: Vec<_> = c.iter().map(ElementId::as_str).collect();
        println!("cluster    {{{}}}", names.join(","));
    }
    let els = h.elements();
    if els.len() >= 3 {
        let t = Triplet::new(els[0].clone(), els[1].clone(), els[2].clone())?;
        println!("{t} -> {}", h.triplet_answer(&t)?);
        println!("induced    {}", h.induced(&els[..3])?.to_newick()?);
    }
    println!("{}", serde_json::to_string_pretty(&h.to_json_tree())?);
    Ok(())
}
