//! Text serialization of a store.
//!
//! ```text
//! LTRIE v1 SCS
//! \t1 v0+5>=0
//! \t\t2 v0+v1<=0
//! \t\t  sol v0=0 v1=-1
//! ```
//!
//! One line per trie edge in preorder, indented by as many tabs as its
//! depth, each leaf followed by its annotation. The implication graph is
//! not written; [`Store::load`] rebuilds it from the labels.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{NodeId, Store, StoreKind, TrieNode};
use crate::canon::{normalize_atomic, Normalized};
use crate::error::{Error, Result};
use crate::expr::{parse, Atom, Solution};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "LTRIE";

impl Store {
    pub fn save(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{MAGIC} v{FORMAT_VERSION} {}", self.kind.tag())?;
        // (node, depth), children pushed in reverse so they pop in order
        let mut stack: Vec<(NodeId, usize)> = self
            .node(NodeId::ROOT)
            .children()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .map(|id| (id, 1))
            .collect();
        while let Some((id, depth)) = stack.pop() {
            let node = self.node(id);
            let indent = "\t".repeat(depth);
            let label = node.label().expect("non-root");
            writeln!(w, "{indent}{depth} {label}")?;
            if self.is_leaf(id) {
                match (&node.solution, self.kind) {
                    (Some(sol), StoreKind::Sat) if sol.is_empty() => writeln!(w, "{indent}  sol")?,
                    (Some(sol), StoreKind::Sat) => writeln!(w, "{indent}  sol {sol}")?,
                    _ => writeln!(w, "{indent}  unsat")?,
                }
            }
            let children: Vec<NodeId> = node.children().collect();
            stack.extend(children.into_iter().rev().map(|c| (c, depth + 1)));
        }
        Ok(())
    }

    pub fn save_to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.save(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("store text is UTF-8")
    }

    pub fn load(r: impl BufRead) -> Result<Store> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(malformed(1, "missing header")),
        };
        let kind = parse_header(&header)?;
        let mut store = Store::new(kind);
        // path[d] is the node at depth d on the current branch
        let mut path: Vec<NodeId> = vec![NodeId::ROOT];
        let mut annotated: Vec<bool> = vec![false];

        for (i, line) in lines {
            let line = line?;
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            let tabs = line.bytes().take_while(|&b| b == b'\t').count();
            let body = &line[tabs..];
            if let Some(annotation) = body.strip_prefix("  ") {
                let id = *path.last().expect("root always present");
                if id == NodeId::ROOT || tabs != path.len() - 1 {
                    return Err(malformed(lineno, "annotation does not follow an edge"));
                }
                if annotated[id.0] {
                    return Err(malformed(lineno, "duplicate annotation"));
                }
                let sol = parse_annotation(annotation, kind, lineno)?;
                store.node_mut(id).solution = sol;
                annotated[id.0] = true;
                continue;
            }
            let (depth, label) = body
                .split_once(' ')
                .ok_or_else(|| malformed(lineno, "expected `<depth> <label>`"))?;
            let depth: usize = depth.parse().map_err(|_| malformed(lineno, "bad depth"))?;
            if depth == 0 || depth != tabs {
                return Err(malformed(lineno, "indentation does not match depth"));
            }
            if depth > path.len() {
                return Err(malformed(lineno, "depth skips a level"));
            }
            path.truncate(depth);
            let parent = *path.last().expect("depth >= 1");
            let atom = parse_label(label, lineno)?;
            if let Some(prev) = store.node(parent).label() {
                if atom <= *prev {
                    return Err(malformed(lineno, "labels must increase along a path"));
                }
            }
            if store.node(parent).child(atom.key()).is_some() {
                return Err(malformed(lineno, "duplicate sibling label"));
            }
            let id = store.alloc(TrieNode::new(Some(atom.clone()), Some(parent)));
            store
                .node_mut(parent)
                .children
                .insert(atom.key().to_string(), id);
            if annotated.len() <= id.0 {
                annotated.resize(id.0 + 1, false);
            }
            path.push(id);
        }

        let ids: Vec<NodeId> = (1..store.nodes.len()).map(NodeId).collect();
        for id in ids {
            let leaf = store.is_leaf(id);
            if leaf != annotated[id.0] {
                let msg = if leaf {
                    "leaf without annotation"
                } else {
                    "annotation on an inner node"
                };
                return Err(malformed(
                    0,
                    format!("{msg}: {}", store.node(id).label().unwrap()),
                ));
            }
            if let (true, Some(sol)) = (leaf, store.node(id).solution()) {
                let path = store.path_to(id);
                for a in path {
                    if !a.holds(sol).unwrap_or(false) {
                        return Err(malformed(0, format!("stored solution {sol} violates {a}")));
                    }
                }
            }
            let label = store.node(id).label().unwrap().clone();
            store.ipog.register(&label, id);
        }
        Ok(store)
    }

    pub fn load_from_path(path: impl AsRef<Path>) -> Result<Store> {
        Store::load(BufReader::new(File::open(path)?))
    }

    pub fn from_text(text: &str) -> Result<Store> {
        Store::load(text.as_bytes())
    }
}

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<StoreKind> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != 3 || parts[0] != MAGIC {
        return Err(malformed(1, "expected `LTRIE v<version> <SCS|UCS>`"));
    }
    if parts[1] != format!("v{FORMAT_VERSION}") {
        return Err(Error::VersionMismatch {
            found: parts[1].to_string(),
            expected: FORMAT_VERSION,
        });
    }
    match parts[2] {
        "SCS" => Ok(StoreKind::Sat),
        "UCS" => Ok(StoreKind::Unsat),
        other => Err(malformed(1, format!("unknown store kind `{other}`"))),
    }
}

fn parse_label(text: &str, line: usize) -> Result<Atom> {
    let raw = parse(text).map_err(|e| malformed(line, e.to_string()))?;
    let [cmp] = raw.as_slice() else {
        return Err(malformed(line, "label must be a single comparison"));
    };
    match normalize_atomic(cmp) {
        Normalized::Atom(a) if a.key() == text => Ok(a),
        _ => Err(malformed(line, format!("`{text}` is not a canonical atom"))),
    }
}

fn parse_annotation(text: &str, kind: StoreKind, line: usize) -> Result<Option<Solution>> {
    match (kind, text) {
        (StoreKind::Unsat, "unsat") => Ok(None),
        (StoreKind::Sat, "sol") => Ok(Some(Solution::new())),
        (StoreKind::Sat, t) if t.starts_with("sol ") => Solution::parse_bindings(&t[4..])
            .map(Some)
            .map_err(|e| malformed(line, e.to_string())),
        _ => Err(malformed(
            line,
            format!("unexpected annotation `{text}` in {kind}"),
        )),
    }
}
