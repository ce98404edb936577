//! Newick text format restricted to unlabelled internal nodes and leaf labels
//! matching `[A-Za-z0-9_.-]+`, without branch lengths.

use super::{BinaryHierarchy, ElementId, HierarchyError, NodeId, TableBuilder};

fn is_label_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-')
}

fn newick_err(msg: impl Into<String>) -> HierarchyError {
    HierarchyError::Newick(msg.into())
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    builder: TableBuilder,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<(), HierarchyError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(newick_err(format!(
                "expected `{want}` at byte {}, found `{c}`",
                self.pos
            ))),
            None => Err(newick_err(format!("expected `{want}`, found end of input"))),
        }
    }

    fn subtree(&mut self) -> Result<NodeId, HierarchyError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let left = self.subtree()?;
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => return Err(newick_err("internal node with a single child")),
                    _ => return Err(newick_err(format!("expected `,` at byte {}", self.pos))),
                }
                let right = self.subtree()?;
                match self.peek() {
                    Some(')') => self.pos += 1,
                    Some(',') => return Err(newick_err("internal node with more than two children")),
                    _ => return Err(newick_err(format!("expected `)` at byte {}", self.pos))),
                }
                if let Some(c) = self.peek() {
                    if is_label_char(c) {
                        return Err(newick_err("internal node labels are not supported"));
                    }
                    if c == ':' {
                        return Err(newick_err("branch lengths are not supported"));
                    }
                }
                Ok(self.builder.internal(left, right))
            }
            Some(c) if is_label_char(c) => {
                let start = self.pos;
                let len: usize = self.src[start..]
                    .chars()
                    .take_while(|&c| is_label_char(c))
                    .map(char::len_utf8)
                    .sum();
                self.pos += len;
                if self.peek() == Some(':') {
                    return Err(newick_err("branch lengths are not supported"));
                }
                let label = ElementId::new(&self.src[start..start + len])?;
                Ok(self.builder.leaf(label))
            }
            Some(c) => Err(newick_err(format!("unexpected `{c}` at byte {}", self.pos))),
            None => Err(newick_err("unexpected end of input")),
        }
    }
}

impl BinaryHierarchy {
    pub fn from_newick(src: &str) -> Result<BinaryHierarchy, HierarchyError> {
        let mut p = Parser {
            src,
            pos: 0,
            builder: TableBuilder::new(),
        };
        let root = p.subtree()?;
        p.expect(';')?;
        if p.peek().is_some() {
            return Err(newick_err("trailing input after `;`"));
        }
        p.builder.finish(root)
    }

    /// Newick text in stored child order.
    pub fn to_newick(&self) -> Result<String, HierarchyError> {
        for x in self.leaves.keys() {
            if !x.as_str().chars().all(is_label_char) {
                return Err(newick_err(format!("label `{x}` is not newick-safe")));
            }
        }
        let mut out = String::new();
        let mut stack = vec![Some(self.root)];
        // `None` entries close a parenthesis; commas go between siblings.
        while let Some(item) = stack.pop() {
            match item {
                None => out.push(')'),
                Some(v) => {
                    if out.ends_with(')') || out.ends_with(|c: char| is_label_char(c)) {
                        out.push(',');
                    }
                    match self.children(v) {
                        None => out.push_str(self.label(v).unwrap().as_str()),
                        Some([l, r]) => {
                            out.push('(');
                            stack.push(None);
                            stack.push(Some(r));
                            stack.push(Some(l));
                        }
                    }
                }
            }
        }
        out.push(';');
        Ok(out)
    }

    /// Newick text of the canonical form; equal for equivalent trees.
    pub fn to_canonical_newick(&self) -> Result<String, HierarchyError> {
        self.to_newick()?;
        Ok(format!("{};", self.canonical_form()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_and_prints() {
        let h = BinaryHierarchy::from_newick(" ((b, a) ,c) ;\n").unwrap();
        assert_eq!(h.to_newick().unwrap(), "((b,a),c);");
        assert_eq!(h.to_canonical_newick().unwrap(), "((a,b),c);");
        assert_eq!(BinaryHierarchy::from_newick("x_1.2-3;").unwrap().leaf_count(), 1);
    }

    #[test]
    fn rejects_unsupported_syntax() {
        for bad in [
            "(a,b)",
            "(a,b,c);",
            "((a),b);",
            "(a,b)root;",
            "(a:1.0,b);",
            "(a,a);",
            "(a,b);x",
            "(a b);",
            "(a,b));",
            "(a,#);",
            "",
        ] {
            assert!(BinaryHierarchy::from_newick(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn unsafe_labels_refuse_to_serialize() {
        let h = BinaryHierarchy::cherry(
            ElementId::new("big cat").unwrap(),
            ElementId::new("dog").unwrap(),
        )
        .unwrap();
        assert!(h.to_newick().is_err());
    }

    proptest! {
        #[test]
        fn canonical_newick_round_trips(seed in any::<u64>(), n in 2usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = BinaryHierarchy::random(n, &mut rng).unwrap();
            let text = h.to_canonical_newick().unwrap();
            let back = BinaryHierarchy::from_newick(&text).unwrap();
            prop_assert_eq!(back.to_canonical_newick().unwrap(), text);
            let plain = BinaryHierarchy::from_newick(&h.to_newick().unwrap()).unwrap();
            prop_assert!(plain.equivalent(&h).unwrap());
        }
    }
}
