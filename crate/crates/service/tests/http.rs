use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use hier_service::{router, SessionStore};
use hiercluster::hierarchy::default_labels;
use hiercluster::insertion::{InsertionMode, InsertionRun};
use hiercluster::{BinaryHierarchy, ElementId, ExactOracle, OrdinalOracle, Triplet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

async fn spawn(store: SessionStore) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(Arc::new(store))).await.unwrap() });
    addr
}

async fn create(c: &Client, base: &str, body: Value) -> reqwest::Response {
    c.post(format!("{base}/sessions")).json(&body).send().await.unwrap()
}

/// Answers every question from `truth`; returns the final tree and question count.
async fn drive(c: &Client, base: &str, id: &str, truth: &BinaryHierarchy) -> (BinaryHierarchy, u64) {
    let mut o = ExactOracle::new(truth.clone());
    loop {
        let q: Value = c.get(format!("{base}/sessions/{id}/query")).send().await.unwrap().json().await.unwrap();
        if q["done"] == json!(true) {
            break;
        }
        let m: Vec<ElementId> = q["triplet"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| ElementId::new(v.as_str().unwrap()).unwrap())
            .collect();
        let a = o.answer(&Triplet::new(m[0].clone(), m[1].clone(), m[2].clone()).unwrap()).unwrap();
        let [x, y] = a.pair();
        let r = c
            .post(format!("{base}/sessions/{id}/answer"))
            .json(&json!({ "pair": [x.as_str(), y.as_str()], "seq": q["seq"] }))
            .send()
            .await
            .unwrap();
        assert_eq!(r.status(), StatusCode::OK);
    }
    let t: Value = c.get(format!("{base}/sessions/{id}/tree")).send().await.unwrap().json().await.unwrap();
    (BinaryHierarchy::from_newick(t["newick"].as_str().unwrap()).unwrap(), t["queries"].as_u64().unwrap())
}

#[tokio::test]
async fn http_sessions_match_the_library() {
    let base = format!("http://{}", spawn(SessionStore::in_memory()).await);
    let c = Client::new();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in [3, 5, 8, 13, 16] {
        let labels = default_labels(n);
        let truth = BinaryHierarchy::random_over(&labels, &mut rng).unwrap();
        let names: Vec<&str> = labels.iter().map(|x| x.as_str()).collect();
        let r = create(&c, &base, json!({ "elements": names, "mode": "noiseless" })).await;
        assert_eq!(r.status(), StatusCode::CREATED);
        let id = r.json::<Value>().await.unwrap()["id"].as_str().unwrap().to_string();
        let (tree, queries) = drive(&c, &base, &id, &truth).await;

        let mut o = ExactOracle::new(truth.clone());
        let lib = InsertionRun::new(labels.clone(), InsertionMode::Exact).unwrap().drive(&mut o).unwrap();
        assert_eq!(tree.canonical_form(), lib.tree().canonical_form());
        assert!(tree.equivalent(&truth).unwrap());
        assert_eq!(queries, o.queries_used());
    }
}

#[tokio::test]
async fn error_statuses() {
    let base = format!("http://{}", spawn(SessionStore::in_memory()).await);
    let c = Client::new();
    let r = c.get(format!("{base}/sessions/not-an-id/query")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    let r = c.get(format!("{base}/sessions/{}/tree", uuid_nil())).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    assert_eq!(create(&c, &base, json!({ "elements": ["a", "a", "b"] })).await.status(), StatusCode::BAD_REQUEST);
    assert_eq!(create(&c, &base, json!({ "elements": [] })).await.status(), StatusCode::BAD_REQUEST);

    let id = create(&c, &base, json!({ "elements": ["lion", "dog", "shark"] })).await.json::<Value>().await.unwrap()["id"]
        .as_str()
        .unwrap()
        .to_string();
    let q1: Value = c.get(format!("{base}/sessions/{id}/query")).send().await.unwrap().json().await.unwrap();
    let q2: Value = c.get(format!("{base}/sessions/{id}/query")).send().await.unwrap().json().await.unwrap();
    assert_eq!(q1, q2);
    assert_eq!(q1["triplet"], json!(["dog", "lion", "shark"]));

    let post = |body: Value| c.post(format!("{base}/sessions/{id}/answer")).json(&body).send();
    assert_eq!(post(json!({ "pair": ["lion", "cat"] })).await.unwrap().status(), StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(post(json!({ "pair": ["lion", "dog"], "seq": 7 })).await.unwrap().status(), StatusCode::CONFLICT);
    let ok: Value = post(json!({ "pair": ["lion", "dog"], "seq": 1 })).await.unwrap().json().await.unwrap();
    assert_eq!(ok["state"]["status"], "done");
    assert_eq!(post(json!({ "pair": ["lion", "dog"], "seq": 1 })).await.unwrap().status(), StatusCode::CONFLICT);
    let q: Value = c.get(format!("{base}/sessions/{id}/query")).send().await.unwrap().json().await.unwrap();
    assert_eq!(q, json!({ "done": true }));
    let t: Value = c.get(format!("{base}/sessions/{id}/tree")).send().await.unwrap().json().await.unwrap();
    assert_eq!(t["queries"], 1);
    assert_eq!(t["json"]["children"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn two_elements_finish_immediately() {
    let base = format!("http://{}", spawn(SessionStore::in_memory()).await);
    let c = Client::new();
    let id = create(&c, &base, json!({ "elements": ["a", "b"] })).await.json::<Value>().await.unwrap()["id"]
        .as_str()
        .unwrap()
        .to_string();
    let q: Value = c.get(format!("{base}/sessions/{id}/query")).send().await.unwrap().json().await.unwrap();
    assert_eq!(q, json!({ "done": true }));
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path: PathBuf = dir.path().into();
    let truth = BinaryHierarchy::from_newick("((a,(b,c)),((d,e),f));").unwrap();

    let base = format!("http://{}", spawn(SessionStore::on_disk(&path).await.unwrap()).await);
    let c = Client::new();
    let id = create(&c, &base, json!({ "elements": ["a", "b", "c", "d", "e", "f"] })).await.json::<Value>().await.unwrap()
        ["id"]
        .as_str()
        .unwrap()
        .to_string();
    // One answer on the first server.
    let q: Value = c.get(format!("{base}/sessions/{id}/query")).send().await.unwrap().json().await.unwrap();
    let m: Vec<ElementId> = q["triplet"].as_array().unwrap().iter().map(|v| ElementId::new(v.as_str().unwrap()).unwrap()).collect();
    let a = ExactOracle::new(truth.clone()).answer(&Triplet::new(m[0].clone(), m[1].clone(), m[2].clone()).unwrap()).unwrap();
    let [x, y] = a.pair();
    c.post(format!("{base}/sessions/{id}/answer")).json(&json!({ "pair": [x.as_str(), y.as_str()] })).send().await.unwrap();

    // The rest on a second server over the same directory.
    let base2 = format!("http://{}", spawn(SessionStore::on_disk(&path).await.unwrap()).await);
    let (tree, _) = drive(&c, &base2, &id, &truth).await;
    assert!(tree.equivalent(&truth).unwrap());
}

#[tokio::test]
async fn noisy_mode_with_exact_answers() {
    let base = format!("http://{}", spawn(SessionStore::in_memory()).await);
    let c = Client::new();
    let truth = BinaryHierarchy::from_newick("((x1,(x2,x3)),(x4,x5));").unwrap();
    let id = create(&c, &base, json!({ "elements": ["x1", "x2", "x3", "x4", "x5"], "mode": "noisy", "p": 0.9 }))
        .await
        .json::<Value>()
        .await
        .unwrap()["id"]
        .as_str()
        .unwrap()
        .to_string();
    let (tree, _) = drive(&c, &base, &id, &truth).await;
    assert!(tree.equivalent(&truth).unwrap());
}

fn uuid_nil() -> &'static str {
    "00000000-0000-0000-0000-000000000000"
}
