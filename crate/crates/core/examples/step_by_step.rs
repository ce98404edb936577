//! Drives the suspended insertion run by hand: read the pending triplet,
//! answer it, and snapshot the state to JSON between answers.
//!
//! `cargo run --example step_by_step`

use hiercluster::insertion::{InsertionMode, InsertionRun};
use hiercluster::{BinaryHierarchy, ElementId, ExactOracle, OrdinalOracle};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = BinaryHierarchy::from_newick("(((lion,tiger),cat),((dog,wolf),shark));")?;
    let order = ["lion", "dog", "shark", "tiger", "wolf", "cat"];
    let elements = order.iter().map(ElementId::new).collect::<Result<Vec<_>, _>>()?;
    let mut oracle = ExactOracle::new(truth.clone());

    let mut run = InsertionRun::new(elements, InsertionMode::Exact)?;
    while let Some(q) = run.pending_query() {
        let answer = oracle.answer(&q.triplet)?;
        println!("#{:<2} placing {:<6} {} -> {}", q.seq, run.inserting().map(|x| x.as_str()).unwrap_or(""), q.triplet, answer);
        run.submit(&answer)?;
        // A service would persist this between requests.
        let saved = serde_json::to_string(&run)?;
        run = serde_json::from_str(&saved)?;
    }
    println!("{} after {} questions: {}", run.tree().to_newick()?, run.queries(), run.tree().equivalent(&truth)?);
    Ok(())
}
