use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub var: String,
    pub concept: String,
}

/// A relation between two variables, stored in normalized direction.
///
/// `inverted` records that the surface form was `:rel-of` written under
/// `target`, so serialization can restore the original layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub relation: String,
    pub target: String,
    pub inverted: bool,
    order: u32,
}

/// A relation from a variable to a constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub source: String,
    pub relation: String,
    pub value: String,
    pub quoted: bool,
    order: u32,
}

impl Edge {
    /// Variable under which the edge is written in PENMAN text.
    pub fn surface_parent(&self) -> &str {
        if self.inverted {
            &self.target
        } else {
            &self.source
        }
    }

    pub fn surface_child(&self) -> &str {
        if self.inverted {
            &self.source
        } else {
            &self.target
        }
    }

    pub fn surface_label(&self) -> String {
        if self.inverted {
            format!(":{}-of", self.relation)
        } else {
            format!(":{}", self.relation)
        }
    }
}

/// One outgoing item of a node in surface order.
#[derive(Debug, Clone, Copy)]
pub enum Child<'a> {
    Edge(&'a Edge),
    Attr(&'a Attribute),
}

impl Child<'_> {
    fn order(&self) -> u32 {
        match self {
            Child::Edge(e) => e.order,
            Child::Attr(a) => a.order,
        }
    }
}

/// Rooted, directed, labeled AMR graph. Cycles are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmrGraph {
    root: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    attributes: Vec<Attribute>,
    next_order: u32,
}

impl AmrGraph {
    pub fn new(root_var: impl Into<String>, root_concept: impl Into<String>) -> Result<Self> {
        let mut g = AmrGraph {
            root: root_var.into(),
            nodes: Vec::new(),
            edges: Vec::new(),
            attributes: Vec::new(),
            next_order: 0,
        };
        let root = g.root.clone();
        g.add_node(root, root_concept)?;
        Ok(g)
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn node_index(&self, var: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.var == var)
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.nodes
            .iter()
            .find(|n| n.var == var)
            .map(|n| n.concept.as_str())
    }

    pub fn root_concept(&self) -> &str {
        self.concept(&self.root).unwrap_or_default()
    }

    pub fn add_node(&mut self, var: impl Into<String>, concept: impl Into<String>) -> Result<()> {
        let var = var.into();
        let concept = concept.into();
        if var.is_empty() {
            return Err(Error::InvalidGraph("empty variable name".into()));
        }
        if concept.is_empty() {
            return Err(Error::InvalidGraph(format!("empty concept for {var}")));
        }
        if self.node_index(&var).is_some() {
            return Err(Error::InvalidGraph(format!("duplicate variable {var}")));
        }
        self.nodes.push(Node { var, concept });
        Ok(())
    }

    pub fn add_edge(&mut self, source: &str, relation: &str, target: &str) -> Result<()> {
        self.push_edge(source, relation, target, false)
    }

    /// Add `source :relation target` written inverted, i.e. as
    /// `target :relation-of source`.
    pub fn add_inverse_edge(&mut self, source: &str, relation: &str, target: &str) -> Result<()> {
        self.push_edge(source, relation, target, true)
    }

    fn push_edge(&mut self, source: &str, relation: &str, target: &str, inverted: bool) -> Result<()> {
        for v in [source, target] {
            if self.node_index(v).is_none() {
                return Err(Error::InvalidGraph(format!("unknown variable {v}")));
            }
        }
        let order = self.bump();
        self.edges.push(Edge {
            source: source.to_string(),
            relation: relation.to_string(),
            target: target.to_string(),
            inverted,
            order,
        });
        Ok(())
    }

    pub fn add_attribute(&mut self, source: &str, relation: &str, value: &str, quoted: bool) -> Result<()> {
        if self.node_index(source).is_none() {
            return Err(Error::InvalidGraph(format!("unknown variable {source}")));
        }
        let order = self.bump();
        self.attributes.push(Attribute {
            source: source.to_string(),
            relation: relation.to_string(),
            value: value.to_string(),
            quoted,
            order,
        });
        Ok(())
    }

    fn bump(&mut self) -> u32 {
        let o = self.next_order;
        self.next_order += 1;
        o
    }

    /// Outgoing items of `var` in the order they appear in PENMAN text.
    pub fn children(&self, var: &str) -> Vec<Child<'_>> {
        let mut out: Vec<Child<'_>> = self
            .edges
            .iter()
            .filter(|e| e.surface_parent() == var)
            .map(Child::Edge)
            .chain(self.attributes.iter().filter(|a| a.source == var).map(Child::Attr))
            .collect();
        out.sort_by_key(Child::order);
        out
    }

    /// Number of incoming normalized edges per variable.
    pub fn in_degrees(&self) -> BTreeMap<&str, usize> {
        let mut deg: BTreeMap<&str, usize> = self.nodes.iter().map(|n| (n.var.as_str(), 0)).collect();
        for e in &self.edges {
            *deg.entry(e.target.as_str()).or_default() += 1;
        }
        deg
    }

    /// Variables reachable from the root following surface direction.
    pub fn reachable(&self) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![self.root.clone()];
        while let Some(v) = stack.pop() {
            if !seen.insert(v.clone()) {
                continue;
            }
            for e in self.edges.iter().filter(|e| e.surface_parent() == v) {
                stack.push(e.surface_child().to_string());
            }
        }
        seen
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_index(&self.root).is_none() {
            return Err(Error::InvalidGraph("root is not a node".into()));
        }
        let mut vars = BTreeSet::new();
        for n in &self.nodes {
            if !vars.insert(n.var.as_str()) {
                return Err(Error::InvalidGraph(format!("duplicate variable {}", n.var)));
            }
            if n.concept.is_empty() {
                return Err(Error::InvalidGraph(format!("empty concept for {}", n.var)));
            }
        }
        for e in &self.edges {
            if !vars.contains(e.source.as_str()) || !vars.contains(e.target.as_str()) {
                return Err(Error::InvalidGraph(format!("dangling edge :{}", e.relation)));
            }
        }
        for a in &self.attributes {
            if !vars.contains(a.source.as_str()) {
                return Err(Error::InvalidGraph(format!("dangling attribute :{}", a.relation)));
            }
        }
        let reach = self.reachable();
        if let Some(n) = self.nodes.iter().find(|n| !reach.contains(&n.var)) {
            return Err(Error::InvalidGraph(format!("{} is unreachable from the root", n.var)));
        }
        Ok(())
    }

    /// Apply `f` to every concept (nodes only).
    pub fn map_concepts(&mut self, mut f: impl FnMut(&str) -> String) {
        for n in &mut self.nodes {
            n.concept = f(&n.concept);
        }
    }

    pub fn set_concept(&mut self, var: &str, concept: impl Into<String>) {
        if let Some(n) = self.nodes.iter_mut().find(|n| n.var == var) {
            n.concept = concept.into();
        }
    }

    pub fn edges_mut(&mut self) -> &mut [Edge] {
        &mut self.edges
    }

    pub fn attributes_mut(&mut self) -> &mut [Attribute] {
        &mut self.attributes
    }

    pub fn remove_edge(&mut self, index: usize) -> Edge {
        self.edges.remove(index)
    }

    pub fn remove_attribute(&mut self, index: usize) -> Attribute {
        self.attributes.remove(index)
    }

    /// Drop every node not reachable from the root, with its edges and
    /// attributes. Returns how many nodes were removed.
    pub fn prune_unreachable(&mut self) -> usize {
        let reach = self.reachable();
        let before = self.nodes.len();
        self.nodes.retain(|n| reach.contains(&n.var));
        self.edges
            .retain(|e| reach.contains(&e.source) && reach.contains(&e.target));
        self.attributes.retain(|a| reach.contains(&a.source));
        before - self.nodes.len()
    }

    /// Copy of the graph with every variable renamed through `f`.
    pub fn rename_vars(&self, mut f: impl FnMut(&str) -> String) -> AmrGraph {
        let map: BTreeMap<&str, String> = self.nodes.iter().map(|n| (n.var.as_str(), f(&n.var))).collect();
        let r = |v: &str| map.get(v).cloned().unwrap_or_else(|| v.to_string());
        AmrGraph {
            root: r(&self.root),
            nodes: self
                .nodes
                .iter()
                .map(|n| Node { var: r(&n.var), concept: n.concept.clone() })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge { source: r(&e.source), target: r(&e.target), ..e.clone() })
                .collect(),
            attributes: self
                .attributes
                .iter()
                .map(|a| Attribute { source: r(&a.source), ..a.clone() })
                .collect(),
            next_order: self.next_order,
        }
    }
}
