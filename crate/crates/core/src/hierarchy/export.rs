use serde::{Deserialize, Serialize};

use super::BinaryHierarchy;

/// Nested JSON view of a hierarchy: `{ "id", "label", "children" }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonNode {
    pub id: usize,
    pub label: Option<String>,
    pub children: Vec<JsonNode>,
}

impl BinaryHierarchy {
    pub fn to_json_tree(&self) -> JsonNode {
        let mut built: Vec<Option<JsonNode>> = vec![None; self.len()];
        for v in self.postorder() {
            let children = match self.children(v) {
                None => Vec::new(),
                Some([l, r]) => vec![built[l.0].take().unwrap(), built[r.0].take().unwrap()],
            };
            built[v.0] = Some(JsonNode {
                id: v.0,
                label: self.label(v).map(|x| x.to_string()),
                children,
            });
        }
        built[self.root().0].take().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exports_nested_nodes() {
        let h = BinaryHierarchy::from_newick("((a,b),c);").unwrap();
        let json = serde_json::to_value(h.to_json_tree()).unwrap();
        assert_eq!(json["id"], h.root().0);
        assert_eq!(json["label"], serde_json::Value::Null);
        assert_eq!(json["children"][0]["children"][1]["label"], "b");
        assert_eq!(json["children"][1]["label"], "c");
        assert_eq!(json["children"][1]["children"].as_array().unwrap().len(), 0);
    }
}
