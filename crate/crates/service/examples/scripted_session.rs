//! Starts the service on a free port and answers its questions from a
//! known tree over HTTP, the way a browser client would.

use hier_service::{serve_listener, SessionStore};
use hiercluster::{BinaryHierarchy, ExactOracle, OrdinalOracle, Triplet};
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = BinaryHierarchy::from_newick("(((lion,tiger),cat),((dog,wolf),(shark,ray)));")?;
    let mut oracle = ExactOracle::new(truth.clone());

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(serve_listener(listener, SessionStore::in_memory()));

    let http = reqwest::Client::new();
    let elements: Vec<String> = truth.elements().iter().map(|e| e.to_string()).collect();
    let created: Value = http
        .post(format!("{base}/sessions"))
        .json(&json!({ "elements": elements }))
        .send()
        .await?
        .json()
        .await?;
    let id = created["id"].as_str().ok_or("no id")?.to_string();
    println!("session {id}");

    loop {
        let q: Value = http.get(format!("{base}/sessions/{id}/query")).send().await?.json().await?;
        if q.get("done").is_some() {
            break;
        }
        let names: Vec<String> = serde_json::from_value(q["triplet"].clone())?;
        let t = Triplet::new(names[0].parse()?, names[1].parse()?, names[2].parse()?)?;
        let [a, b] = oracle.answer(&t)?.pair().clone();
        println!("#{:<3} {{{}}} -> {a}, {b}", q["seq"], names.join(", "));
        http.post(format!("{base}/sessions/{id}/answer"))
            .json(&json!({ "pair": [a.to_string(), b.to_string()], "seq": q["seq"] }))
            .send()
            .await?
            .error_for_status()?;
    }

    let tree: Value = http.get(format!("{base}/sessions/{id}/tree")).send().await?.json().await?;
    let got = BinaryHierarchy::from_newick(tree["newick"].as_str().ok_or("no newick")?)?;
    println!("{} after {} answers, matches: {}", tree["newick"], tree["queries"], got.equivalent(&truth)?);
    Ok(())
}
