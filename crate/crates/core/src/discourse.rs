//! RST discourse trees from an external parser, and the 20 discourse features
//! derived from them.
//!
//! Tree files are JSON lines `{"segment": "...", "tree": NODE}` where a node is
//! either `{"relation": "Elaboration", "nucleus_side": "left", "children": [NODE, NODE]}`
//! or `{"leaf": {"sentence_id": 3, "edu_span": [0, 7]}}`. Each leaf is one EDU.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_MAPPING: &str = include_str!("../resources/rst_relations.txt");

pub const FEATURE_DIM: usize = 20;

#[derive(Debug, Error)]
pub enum DiscourseError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: schema error: {msg}")]
    Schema { line: usize, msg: String },
    #[error("relation mapping line {line}: {msg}")]
    Mapping { line: usize, msg: String },
    #[error("discourse io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Attribution,
    Background,
    Cause,
    Comparison,
    Condition,
    Contrast,
    Elaboration,
    Enablement,
    Evaluation,
    Explanation,
    Joint,
    MannerMeans,
    TopicComment,
    Summary,
    Temporal,
    TopicChange,
    TextualOrganization,
    SameUnit,
}

impl Relation {
    pub const ALL: [Relation; 18] = [
        Relation::Attribution,
        Relation::Background,
        Relation::Cause,
        Relation::Comparison,
        Relation::Condition,
        Relation::Contrast,
        Relation::Elaboration,
        Relation::Enablement,
        Relation::Evaluation,
        Relation::Explanation,
        Relation::Joint,
        Relation::MannerMeans,
        Relation::TopicComment,
        Relation::Summary,
        Relation::Temporal,
        Relation::TopicChange,
        Relation::TextualOrganization,
        Relation::SameUnit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Attribution => "Attribution",
            Relation::Background => "Background",
            Relation::Cause => "Cause",
            Relation::Comparison => "Comparison",
            Relation::Condition => "Condition",
            Relation::Contrast => "Contrast",
            Relation::Elaboration => "Elaboration",
            Relation::Enablement => "Enablement",
            Relation::Evaluation => "Evaluation",
            Relation::Explanation => "Explanation",
            Relation::Joint => "Joint",
            Relation::MannerMeans => "Manner-Means",
            Relation::TopicComment => "Topic-Comment",
            Relation::Summary => "Summary",
            Relation::Temporal => "Temporal",
            Relation::TopicChange => "Topic-Change",
            Relation::TextualOrganization => "Textual-Organization",
            Relation::SameUnit => "Same-Unit",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Relation> {
        let key = normalize(name);
        Relation::ALL.into_iter().find(|r| normalize(r.name()) == key)
    }
}

fn normalize(label: &str) -> String {
    label
        .trim()
        .to_lowercase()
        .replace(['_', ' '], "-")
}

/// Maps parser labels onto the 18 relation classes.
#[derive(Debug, Clone)]
pub struct RelationMap {
    table: HashMap<String, Relation>,
}

impl Default for RelationMap {
    fn default() -> Self {
        RelationMap::parse(DEFAULT_MAPPING).expect("built-in relation mapping")
    }
}

impl RelationMap {
    pub fn parse(text: &str) -> Result<Self, DiscourseError> {
        let mut table = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(fine), Some(coarse), None) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(DiscourseError::Mapping {
                    line: i + 1,
                    msg: "expected two fields".into(),
                });
            };
            let rel = Relation::from_name(coarse).ok_or_else(|| DiscourseError::Mapping {
                line: i + 1,
                msg: format!("unknown relation class {coarse:?}"),
            })?;
            table.insert(normalize(fine), rel);
        }
        Ok(RelationMap { table })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, DiscourseError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DiscourseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn resolve(&self, label: &str) -> Option<Relation> {
        if let Some(r) = Relation::from_name(label) {
            return Some(r);
        }
        let key = normalize(label);
        if let Some(r) = self.table.get(&key) {
            return Some(*r);
        }
        ["-e", "-s", "-n"]
            .iter()
            .find_map(|suf| key.strip_suffix(suf))
            .and_then(|k| self.table.get(k).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NucleusSide {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub sentence_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edu_span: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RstNode {
    Leaf(Leaf),
    Node {
        relation: Relation,
        nucleus_side: NucleusSide,
        children: Box<[RstNode; 2]>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    relation: Option<String>,
    nucleus_side: Option<NucleusSide>,
    children: Option<Vec<RawNode>>,
    leaf: Option<Leaf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    segment: String,
    tree: RawNode,
}

fn convert(raw: RawNode, map: &RelationMap) -> Result<RstNode, String> {
    match (raw.leaf, raw.children) {
        (Some(leaf), None) => {
            if raw.relation.is_some() || raw.nucleus_side.is_some() {
                return Err("leaf node carries a relation".into());
            }
            Ok(RstNode::Leaf(leaf))
        }
        (None, Some(children)) => {
            if children.len() != 2 {
                return Err(format!("non-binary node with {} children", children.len()));
            }
            let label = raw.relation.ok_or("internal node without relation")?;
            let relation = map
                .resolve(&label)
                .ok_or_else(|| format!("unknown relation label {label:?}"))?;
            let nucleus_side = raw.nucleus_side.ok_or("internal node without nucleus_side")?;
            let mut it = children.into_iter();
            let left = convert(it.next().unwrap(), map)?;
            let right = convert(it.next().unwrap(), map)?;
            Ok(RstNode::Node {
                relation,
                nucleus_side,
                children: Box::new([left, right]),
            })
        }
        (Some(_), Some(_)) => Err("node has both leaf and children".into()),
        (None, None) => Err("node has neither leaf nor children".into()),
    }
}

impl RstNode {
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            RstNode::Leaf(l) => out.push(l),
            RstNode::Node { children, .. } => {
                children[0].collect_leaves(out);
                children[1].collect_leaves(out);
            }
        }
    }

    pub fn sentence_ids(&self) -> HashSet<u64> {
        self.leaves().iter().map(|l| l.sentence_id).collect()
    }
}

pub fn parse_tree(json: &str, map: &RelationMap) -> Result<RstNode, DiscourseError> {
    let raw: RawNode =
        serde_json::from_str(json).map_err(|e| DiscourseError::Parse { line: 1, msg: e.to_string() })?;
    convert(raw, map).map_err(|msg| DiscourseError::Schema { line: 1, msg })
}

pub fn load_rst(
    path: impl AsRef<Path>,
    map: &RelationMap,
) -> Result<BTreeMap<String, RstNode>, DiscourseError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DiscourseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rst(&text, map)
}

pub fn parse_rst(text: &str, map: &RelationMap) -> Result<BTreeMap<String, RstNode>, DiscourseError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let rec: RawRecord = serde_json::from_str(line).map_err(|e| DiscourseError::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let tree =
            convert(rec.tree, map).map_err(|msg| DiscourseError::Schema { line: line_no, msg })?;
        if out.insert(rec.segment.clone(), tree).is_some() {
            return Err(DiscourseError::Schema {
                line: line_no,
                msg: format!("duplicate segment {:?}", rec.segment),
            });
        }
    }
    Ok(out)
}

/// 18 relation indicators followed by the nucleus and satellite counts.
///
/// A relation fires when one side of a node holds only target EDUs and the
/// other side holds at least one EDU of another sentence. Counts tally the role
/// of each target EDU within its parent; a tree that is a single leaf counts as
/// one nucleus.
pub fn discourse_features(tree: Option<&RstNode>, targets: &HashSet<u64>) -> [f64; FEATURE_DIM] {
    let mut out = [0.0; FEATURE_DIM];
    let Some(tree) = tree else { return out };
    if let RstNode::Leaf(l) = tree {
        if targets.contains(&l.sentence_id) {
            out[18] = 1.0;
        }
        return out;
    }
    walk(tree, targets, &mut out);
    out
}

/// Returns (has target EDU, has non-target EDU) for the subtree.
fn walk(node: &RstNode, targets: &HashSet<u64>, out: &mut [f64; FEATURE_DIM]) -> (bool, bool) {
    match node {
        RstNode::Leaf(l) => {
            let t = targets.contains(&l.sentence_id);
            (t, !t)
        }
        RstNode::Node {
            relation,
            nucleus_side,
            children,
        } => {
            let l = walk(&children[0], targets, out);
            let r = walk(&children[1], targets, out);
            let only_target = |s: (bool, bool)| s.0 && !s.1;
            if (only_target(l) && r.1) || (only_target(r) && l.1) {
                out[relation.index()] = 1.0;
            }
            for (side, child) in children.iter().enumerate() {
                if let RstNode::Leaf(leaf) = child {
                    if targets.contains(&leaf.sentence_id) {
                        let nucleus = match nucleus_side {
                            NucleusSide::Both => true,
                            NucleusSide::Left => side == 0,
                            NucleusSide::Right => side == 1,
                        };
                        out[if nucleus { 18 } else { 19 }] += 1.0;
                    }
                }
            }
            (l.0 || r.0, l.1 || r.1)
        }
    }
}

pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = Relation::ALL
        .iter()
        .map(|r| format!("rst_{}", r.name().to_lowercase()))
        .collect();
    names.push("rst_nuclei".into());
    names.push("rst_satellites".into());
    names
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn leaf(id: u64) -> RstNode {
        RstNode::Leaf(Leaf {
            sentence_id: id,
            edu_span: None,
        })
    }

    fn node(rel: Relation, side: NucleusSide, a: RstNode, b: RstNode) -> RstNode {
        RstNode::Node {
            relation: rel,
            nucleus_side: side,
            children: Box::new([a, b]),
        }
    }

    fn ids(v: &[u64]) -> HashSet<u64> {
        v.iter().copied().collect()
    }

    #[test]
    fn contrast_only() {
        // (s1 -Contrast- s2) -Elaboration-> s3 with s3 the satellite
        let tree = node(
            Relation::Elaboration,
            NucleusSide::Left,
            node(Relation::Contrast, NucleusSide::Both, leaf(1), leaf(2)),
            leaf(3),
        );
        let f = discourse_features(Some(&tree), &ids(&[2]));
        for r in Relation::ALL {
            let want = if r == Relation::Contrast { 1.0 } else { 0.0 };
            assert_eq!(f[r.index()], want, "{r:?}");
        }
        assert_eq!((f[18], f[19]), (1.0, 0.0));
        let f3 = discourse_features(Some(&tree), &ids(&[3]));
        assert_eq!(f3[Relation::Elaboration.index()], 1.0);
        assert_eq!((f3[18], f3[19]), (0.0, 1.0));
    }

    #[test]
    fn single_leaf_and_missing_trees() {
        let f = discourse_features(Some(&leaf(4)), &ids(&[4]));
        assert!(f[..18].iter().all(|&x| x == 0.0));
        assert_eq!((f[18], f[19]), (1.0, 0.0));
        assert_eq!(discourse_features(None, &ids(&[4])), [0.0; 20]);
        // target absent from the tree
        let tree = node(Relation::Joint, NucleusSide::Both, leaf(1), leaf(2));
        assert_eq!(discourse_features(Some(&tree), &ids(&[9])), [0.0; 20]);
    }

    #[test]
    fn multi_edu_target_counts_each_edu() {
        // target sentence 1 has two EDUs joined by Same-Unit, elaborated by sentence 2
        let tree = node(
            Relation::Elaboration,
            NucleusSide::Left,
            node(Relation::SameUnit, NucleusSide::Both, leaf(1), leaf(1)),
            leaf(2),
        );
        let f = discourse_features(Some(&tree), &ids(&[1]));
        assert_eq!(f[Relation::Elaboration.index()], 1.0);
        // Same-Unit joins two pieces of the target only, so it links to nothing else
        assert_eq!(f[Relation::SameUnit.index()], 0.0);
        assert_eq!((f[18], f[19]), (2.0, 0.0));
    }

    #[test]
    fn loads_files_and_rejects_bad_nodes() {
        let map = RelationMap::default();
        let good = r#"{"segment":"s0","tree":{"leaf":{"sentence_id":1}}}
{"segment":"s1","tree":{"relation":"Elaboration","nucleus_side":"left","children":[{"leaf":{"sentence_id":1,"edu_span":[0,4]}},{"leaf":{"sentence_id":2}}]}}
{"segment":"s2","tree":{"relation":"elaboration-additional-e","nucleus_side":"left","children":[{"leaf":{"sentence_id":1}},{"leaf":{"sentence_id":2}}]}}"#;
        let trees = parse_rst(good, &map).unwrap();
        assert_eq!(trees.len(), 3);
        assert!(matches!(
            &trees["s2"],
            RstNode::Node { relation: Relation::Elaboration, .. }
        ));
        let foo = r#"{"segment":"s","tree":{"relation":"Foo","nucleus_side":"left","children":[{"leaf":{"sentence_id":1}},{"leaf":{"sentence_id":2}}]}}"#;
        let err = parse_rst(foo, &map).unwrap_err();
        assert!(matches!(err, DiscourseError::Schema { line: 1, .. }), "{err}");
        let ternary = r#"{"segment":"s","tree":{"relation":"Joint","nucleus_side":"both","children":[{"leaf":{"sentence_id":1}},{"leaf":{"sentence_id":2}},{"leaf":{"sentence_id":3}}]}}"#;
        assert!(parse_rst(ternary, &map).unwrap_err().to_string().contains("non-binary"));
    }

    #[test]
    fn mapping_covers_all_classes() {
        let map = RelationMap::default();
        for r in Relation::ALL {
            assert_eq!(map.resolve(r.name()), Some(r));
        }
        assert_eq!(map.resolve("temporal-after"), Some(Relation::Temporal));
        assert_eq!(map.resolve("TextualOrganization"), Some(Relation::TextualOrganization));
        assert_eq!(feature_names().len(), FEATURE_DIM);
    }

    fn arb_tree(max_id: u64) -> impl Strategy<Value = RstNode> {
        let leaf = (0..max_id).prop_map(leaf);
        leaf.prop_recursive(4, 16, 2, |inner| {
            (
                0usize..18,
                prop_oneof![Just(NucleusSide::Left), Just(NucleusSide::Right), Just(NucleusSide::Both)],
                inner.clone(),
                inner,
            )
                .prop_map(|(r, s, a, b)| node(Relation::ALL[r], s, a, b))
        })
    }

    fn relabel(t: &RstNode, f: &dyn Fn(u64) -> u64) -> RstNode {
        match t {
            RstNode::Leaf(l) => leaf(f(l.sentence_id)),
            RstNode::Node { relation, nucleus_side, children } => node(
                *relation,
                *nucleus_side,
                relabel(&children[0], f),
                relabel(&children[1], f),
            ),
        }
    }

    proptest! {
        #[test]
        fn counts_match_target_edus(tree in arb_tree(5), target in 0u64..5) {
            let t = ids(&[target]);
            let f = discourse_features(Some(&tree), &t);
            prop_assert_eq!(f.len(), 20);
            prop_assert!(f[..18].iter().all(|&x| x == 0.0 || x == 1.0));
            let edus = tree.leaves().iter().filter(|l| l.sentence_id == target).count();
            prop_assert_eq!((f[18] + f[19]) as usize, edus);
        }

        #[test]
        fn invariant_under_id_relabeling(tree in arb_tree(5), target in 0u64..5, offset in 1u64..1000) {
            let f = |id: u64| (4 - id) * 7 + offset;
            let moved = relabel(&tree, &f);
            prop_assert_eq!(
                discourse_features(Some(&tree), &ids(&[target])),
                discourse_features(Some(&moved), &ids(&[f(target)]))
            );
        }
    }
}
