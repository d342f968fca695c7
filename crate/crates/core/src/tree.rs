//! Finite decision trees and their JSON form.
//!
//! ```json
//! {"name": "coin", "output_dim": 1, "caps": {"info": 0, "rand": 1},
//!  "rand_alphabet": ["u0", "u1"],
//!  "root": {"kind": "rand", "query": 1, "children": {
//!      "u0": {"kind": "stop", "output": ["-1"]},
//!      "u1": {"kind": "stop", "output": ["1"]}}}}
//! ```
//!
//! Information nodes carry `{"coord": i}` or `{"point": x}` as query and
//! key their children by the answer value; random nodes carry the index
//! `j` and key their children by symbol label.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{
    Action, Answer, Caps, Entry, FiniteRestriction, InfoQuery, Query, RandQuery, Strategy, Symbol,
    Transcript, Vector,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Node<S> {
    Info {
        query: InfoQuery<S>,
        children: Vec<(S, Node<S>)>,
    },
    Rand {
        query: RandQuery,
        children: Vec<(Symbol, Node<S>)>,
    },
    Stop {
        output: Vector<S>,
    },
}

impl<S: Scalar> Node<S> {
    pub fn stop(output: Vector<S>) -> Self {
        Node::Stop { output }
    }

    fn action(&self) -> Action<S> {
        match self {
            Node::Info { query, .. } => Action::AskInfo(query.clone()),
            Node::Rand { query, .. } => Action::AskRand(*query),
            Node::Stop { output } => Action::Stop(output.clone()),
        }
    }

    fn child(&self, entry: &Entry<S>) -> Result<&Node<S>> {
        match (self, entry.query(), entry.answer()) {
            (Node::Info { query, children }, Query::Info(q), Answer::Info(v)) if q == query => children
                .iter()
                .find(|(a, _)| a.approx_eq(v))
                .map(|(_, n)| n)
                .ok_or_else(|| Error::MalformedStrategy(format!("no branch for answer {v} to {q}"))),
            (Node::Rand { query, children }, Query::Rand(j), Answer::Rand(s)) if j == query => children
                .iter()
                .find(|(a, _)| a == s)
                .map(|(_, n)| n)
                .ok_or_else(|| Error::MalformedStrategy(format!("no branch for symbol {} of query {}", s.0, j.0))),
            (Node::Stop { .. }, _, _) => Err(Error::MalformedTranscript("transcript continues past a stop".into())),
            _ => Err(Error::MalformedTranscript("transcript does not follow the tree".into())),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + match self {
            Node::Info { children, .. } => children.iter().map(|(_, c)| c.node_count()).sum(),
            Node::Rand { children, .. } => children.iter().map(|(_, c)| c.node_count()).sum(),
            Node::Stop { .. } => 0,
        }
    }

    pub fn rand_node_count(&self) -> usize {
        match self {
            Node::Info { children, .. } => children.iter().map(|(_, c)| c.rand_node_count()).sum(),
            Node::Rand { children, .. } => 1 + children.iter().map(|(_, c)| c.rand_node_count()).sum::<usize>(),
            Node::Stop { .. } => 0,
        }
    }

    /// Largest `(info, rand)` call counts along any root-to-leaf path.
    pub fn worst_case_caps(&self) -> Caps {
        match self {
            Node::Stop { .. } => Caps::new(0, 0),
            Node::Info { children, .. } => {
                let c = max_caps(children.iter().map(|(_, n)| n.worst_case_caps()));
                Caps::new(c.info + 1, c.rand)
            }
            Node::Rand { children, .. } => {
                let c = max_caps(children.iter().map(|(_, n)| n.worst_case_caps()));
                Caps::new(c.info, c.rand + 1)
            }
        }
    }

    fn to_json(&self, alphabet: &[String]) -> Value {
        match self {
            Node::Info { query, children } => {
                let kids: Map<String, Value> = children
                    .iter()
                    .map(|(a, n)| (a.to_string(), n.to_json(alphabet)))
                    .collect();
                json!({"kind": "info", "query": query_to_json(query), "children": kids})
            }
            Node::Rand { query, children } => {
                let kids: Map<String, Value> = children
                    .iter()
                    .map(|(s, n)| (alphabet[s.0].clone(), n.to_json(alphabet)))
                    .collect();
                json!({"kind": "rand", "query": query.0, "children": kids})
            }
            Node::Stop { output } => json!({"kind": "stop", "output": output.to_json()}),
        }
    }

    fn from_json(value: &Value, alphabet: &[String], dim: usize) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("tree node must be an object".into()))?;
        let kind = obj.get("kind").and_then(Value::as_str).unwrap_or("");
        let children = || {
            obj.get("children")
                .and_then(Value::as_object)
                .ok_or_else(|| Error::Parse(format!("{kind} node needs a `children` object")))
        };
        match kind {
            "stop" => {
                let output = Vector::from_json(
                    obj.get("output")
                        .ok_or_else(|| Error::Parse("stop node needs an `output`".into()))?,
                )?;
                if output.dim() != dim {
                    return Err(Error::Parse(format!(
                        "stop output of dimension {} in a tree of dimension {dim}",
                        output.dim()
                    )));
                }
                Ok(Node::Stop { output })
            }
            "info" => {
                let query = query_from_json(
                    obj.get("query")
                        .ok_or_else(|| Error::Parse("info node needs a `query`".into()))?,
                )?;
                let mut kids = Vec::new();
                for (key, child) in children()? {
                    let answer = S::parse_str(key)?;
                    if kids.iter().any(|(a, _): &(S, Node<S>)| a.approx_eq(&answer)) {
                        return Err(Error::Parse(format!("duplicate answer `{key}`")));
                    }
                    kids.push((answer, Node::from_json(child, alphabet, dim)?));
                }
                kids.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable answers"));
                Ok(Node::Info { query, children: kids })
            }
            "rand" => {
                let j = obj
                    .get("query")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| Error::Parse("rand node needs an integer `query`".into()))?;
                let query = RandQuery::new(j).map_err(|e| Error::Parse(e.to_string()))?;
                let mut kids = Vec::new();
                for (label, child) in children()? {
                    let s = alphabet
                        .iter()
                        .position(|l| l == label)
                        .ok_or_else(|| Error::Parse(format!("symbol `{label}` not in the alphabet")))?;
                    kids.push((Symbol(s), Node::from_json(child, alphabet, dim)?));
                }
                kids.sort_by_key(|(s, _)| *s);
                Ok(Node::Rand { query, children: kids })
            }
            other => Err(Error::Parse(format!("unknown node kind `{other}`"))),
        }
    }
}

fn max_caps(caps: impl Iterator<Item = Caps>) -> Caps {
    caps.fold(Caps::new(0, 0), |a, b| Caps::new(a.info.max(b.info), a.rand.max(b.rand)))
}

fn query_to_json<S: Scalar>(q: &InfoQuery<S>) -> Value {
    match q {
        InfoQuery::Coord(i) => json!({"coord": i}),
        InfoQuery::Point(x) => json!({"point": x.to_json()}),
    }
}

fn query_from_json<S: Scalar>(value: &Value) -> Result<InfoQuery<S>> {
    if let Some(i) = value.get("coord") {
        let i = i
            .as_u64()
            .ok_or_else(|| Error::Parse("`coord` must be a positive integer".into()))?;
        return Ok(InfoQuery::Coord(i as usize));
    }
    if let Some(x) = value.get("point") {
        return Ok(InfoQuery::Point(S::from_json(x)?));
    }
    Err(Error::Parse(format!("unrecognized information query {value}")))
}

/// A strategy stored as an explicit tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree<S> {
    pub name: String,
    pub output_dim: usize,
    pub caps: Option<Caps>,
    pub rand_alphabet: Vec<String>,
    pub root: Node<S>,
}

impl<S: Scalar> DecisionTree<S> {
    pub fn new(name: impl Into<String>, output_dim: usize, rand_alphabet: Vec<String>, root: Node<S>) -> Self {
        DecisionTree {
            name: name.into(),
            output_dim,
            caps: None,
            rand_alphabet,
            root,
        }
    }

    pub fn with_caps(mut self, caps: Caps) -> Self {
        self.caps = Some(caps);
        self
    }

    /// Largest call counts along any path of the tree.
    pub fn worst_case_caps(&self) -> Caps {
        self.root.worst_case_caps()
    }

    pub fn is_deterministic(&self) -> bool {
        self.root.rand_node_count() == 0
    }

    pub fn to_json(&self) -> Value {
        let mut obj = json!({
            "name": self.name,
            "output_dim": self.output_dim,
            "rand_alphabet": self.rand_alphabet,
            "root": self.root.to_json(&self.rand_alphabet),
        });
        if let Some(c) = self.caps {
            obj["caps"] = json!({"info": c.info, "rand": c.rand});
        }
        obj
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let name = value.get("name").and_then(Value::as_str).unwrap_or("tree").to_string();
        let output_dim = value.get("output_dim").and_then(Value::as_u64).unwrap_or(1) as usize;
        let rand_alphabet: Vec<String> = match value.get("rand_alphabet") {
            None => Vec::new(),
            Some(v) => serde_json::from_value(v.clone())?,
        };
        let caps = match value.get("caps") {
            None | Some(Value::Null) => None,
            Some(v) => Some(serde_json::from_value::<Caps>(v.clone())?),
        };
        let root = Node::from_json(
            value
                .get("root")
                .ok_or_else(|| Error::Parse("tree needs a `root`".into()))?,
            &rand_alphabet,
            output_dim,
        )?;
        let tree = DecisionTree {
            name,
            output_dim,
            caps,
            rand_alphabet,
            root,
        };
        if let Some(c) = tree.caps {
            let w = tree.worst_case_caps();
            if !c.admits(w.info, w.rand) {
                return Err(Error::CapsViolated(format!("tree needs {w} but declares {c}")));
            }
        }
        Ok(tree)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    fn node_at(&self, transcript: &Transcript<S>) -> Result<&Node<S>> {
        transcript
            .entries()
            .iter()
            .try_fold(&self.root, |node, entry| node.child(entry))
    }
}

impl<S: Scalar> Strategy<S> for DecisionTree<S> {
    fn action(&self, transcript: &Transcript<S>) -> Result<Action<S>> {
        Ok(self.node_at(transcript)?.action())
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn declared_caps(&self) -> Option<Caps> {
        self.caps
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Expands a strategy into an explicit tree over a finite information alphabet.
///
/// Repeated queries only get the branch consistent with the earlier answer.
/// Without a restriction any random call is an error.
pub fn materialize<S: Scalar>(
    strategy: &dyn Strategy<S>,
    answers: &[S],
    restriction: Option<&FiniteRestriction<S>>,
    max_depth: usize,
) -> Result<DecisionTree<S>> {
    fn build<S: Scalar>(
        strategy: &dyn Strategy<S>,
        answers: &[S],
        restriction: Option<&FiniteRestriction<S>>,
        max_depth: usize,
        t: &Transcript<S>,
    ) -> Result<Node<S>> {
        let action = strategy.action(t)?;
        if !action.is_stop() && t.len() >= max_depth {
            return Err(Error::NonterminatingPath { max_steps: max_depth });
        }
        Ok(match action {
            Action::Stop(output) => Node::Stop { output },
            Action::AskInfo(q) => {
                let values: Vec<S> = match t.recorded_info(&q) {
                    Some(v) => vec![v.clone()],
                    None => answers.to_vec(),
                };
                let children = values
                    .into_iter()
                    .map(|v| {
                        let child = build(strategy, answers, restriction, max_depth, &t.extended(Entry::info(q.clone(), v.clone())))?;
                        Ok((v, child))
                    })
                    .collect::<Result<_>>()?;
                Node::Info { query: q, children }
            }
            Action::AskRand(j) => {
                let r = restriction.ok_or_else(|| {
                    Error::MalformedStrategy(format!("random query {} in a deterministic tree", j.0))
                })?;
                let symbols: Vec<Symbol> = match t.recorded_rand(j) {
                    Some(s) => vec![s],
                    None => r.support(j).into_iter().map(|(s, _)| s).collect(),
                };
                let children = symbols
                    .into_iter()
                    .map(|s| Ok((s, build(strategy, answers, restriction, max_depth, &t.extended(Entry::rand(j, s)))?)))
                    .collect::<Result<_>>()?;
                Node::Rand { query: j, children }
            }
        })
    }
    let root = build(strategy, answers, restriction, max_depth, &Transcript::new())?;
    let alphabet = restriction.map(|r| r.alphabet().to_vec()).unwrap_or_default();
    let mut tree = DecisionTree::new(strategy.name(), strategy.output_dim(), alphabet, root);
    tree.caps = strategy.declared_caps();
    Ok(tree)
}

/// Index of every stop leaf by path, for diagnostics.
pub fn leaves<S: Scalar>(tree: &DecisionTree<S>) -> BTreeMap<String, Vector<S>> {
    fn walk<S: Scalar>(node: &Node<S>, path: String, out: &mut BTreeMap<String, Vector<S>>) {
        match node {
            Node::Stop { output } => {
                out.insert(path, output.clone());
            }
            Node::Info { children, .. } => {
                for (a, c) in children {
                    walk(c, format!("{path}/{a}"), out);
                }
            }
            Node::Rand { children, .. } => {
                for (s, c) in children {
                    walk(c, format!("{path}/#{}", s.0), out);
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(&tree.root, String::new(), &mut out);
    out
}
