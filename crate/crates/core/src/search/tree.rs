//! Arena-allocated AND/OR search tree and truth propagation.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeType {
    Dtnu,
    /// Decision between executing a controllable and waiting.
    DOr,
    Wait,
    /// Choice of reactive strategy for a wait.
    WOr,
    /// One child per possible outcome of the wait.
    And,
}

impl NodeType {
    fn is_or(self) -> bool {
        matches!(self, NodeType::DOr | NodeType::WOr)
    }

    fn is_and(self) -> bool {
        matches!(self, NodeType::And)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    Unknown,
    True,
    False,
}

impl Truth {
    pub fn is_known(self) -> bool {
        self != Truth::Unknown
    }
}

#[derive(Debug, Clone)]
pub struct Node<P> {
    pub ty: NodeType,
    pub truth: Truth,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub payload: P,
}

#[derive(Debug, Clone)]
pub struct Tree<P> {
    nodes: Vec<Node<P>>,
    created: u64,
}

impl<P> Tree<P> {
    pub fn new(ty: NodeType, payload: P) -> Self {
        Tree {
            nodes: vec![Node {
                ty,
                truth: Truth::Unknown,
                parent: None,
                children: Vec::new(),
                payload,
            }],
            created: 1,
        }
    }

    pub const ROOT: NodeId = NodeId(0);

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes ever allocated, including truncated ones.
    pub fn created(&self) -> u64 {
        self.created
    }

    pub fn node(&self, id: NodeId) -> &Node<P> {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node<P> {
        &mut self.nodes[id.index()]
    }

    pub fn truth(&self, id: NodeId) -> Truth {
        self.node(id).truth
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.node(id).children
    }

    pub fn add_child(&mut self, parent: NodeId, ty: NodeType, payload: P) -> NodeId {
        let id = NodeId(u32::try_from(self.nodes.len()).expect("tree exceeds u32 nodes"));
        self.nodes.push(Node {
            ty,
            truth: Truth::Unknown,
            parent: Some(parent),
            children: Vec::new(),
            payload,
        });
        self.nodes[parent.index()].children.push(id);
        self.created += 1;
        id
    }

    /// Sets a truth value. Known values never change.
    pub fn set_truth(&mut self, id: NodeId, truth: Truth) {
        let node = &mut self.nodes[id.index()];
        assert!(
            !node.truth.is_known() || node.truth == truth,
            "truth of {id} would change from {:?} to {truth:?}",
            node.truth
        );
        node.truth = truth;
    }

    /// Propagates the known truth of `id` towards the root, stopping at the
    /// first ancestor whose value does not change.
    pub fn propagate_truth(&mut self, id: NodeId) {
        let mut cur = id;
        loop {
            let value = self.truth(cur);
            debug_assert!(value.is_known());
            let Some(parent) = self.parent(cur) else {
                return;
            };
            if self.truth(parent).is_known() {
                return;
            }
            let ty = self.node(parent).ty;
            let children = self.children(parent);
            let derived = if ty.is_or() {
                match value {
                    Truth::True => Truth::True,
                    _ if children.iter().all(|c| self.truth(*c) == Truth::False) => Truth::False,
                    _ => Truth::Unknown,
                }
            } else if ty.is_and() {
                match value {
                    Truth::False => Truth::False,
                    _ if children.iter().all(|c| self.truth(*c) == Truth::True) => Truth::True,
                    _ => Truth::Unknown,
                }
            } else {
                // DTNU and wait nodes have a single child
                value
            };
            if !derived.is_known() {
                return;
            }
            self.set_truth(parent, derived);
            cur = parent;
        }
    }

    /// Frees the subtree below `id`. Valid only when `id`'s descendants are
    /// the most recently allocated nodes, which depth-first expansion
    /// guarantees for a node that has just been finished.
    pub fn truncate_below(&mut self, id: NodeId) {
        let Some(first) = self.children(id).first().copied() else {
            return;
        };
        debug_assert!(first > id);
        self.nodes.truncate(first.index());
        self.nodes[id.index()].children.clear();
    }

    /// Evaluates the subtree by recursion over the children, treating
    /// childless unknown nodes as unknown.
    pub fn evaluate(&self, id: NodeId) -> Truth {
        let node = self.node(id);
        if node.children.is_empty() {
            return node.truth;
        }
        let values = node.children.iter().map(|c| self.evaluate(*c));
        if node.ty.is_or() {
            let mut any_unknown = false;
            for v in values {
                match v {
                    Truth::True => return Truth::True,
                    Truth::Unknown => any_unknown = true,
                    Truth::False => {}
                }
            }
            if any_unknown {
                Truth::Unknown
            } else {
                Truth::False
            }
        } else if node.ty.is_and() {
            let mut any_unknown = false;
            for v in values {
                match v {
                    Truth::False => return Truth::False,
                    Truth::Unknown => any_unknown = true,
                    Truth::True => {}
                }
            }
            if any_unknown {
                Truth::Unknown
            } else {
                Truth::True
            }
        } else {
            values.into_iter().next().expect("one child")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn or_and_propagation() {
        let mut t = Tree::new(NodeType::Dtnu, ());
        let or = t.add_child(Tree::<()>::ROOT, NodeType::DOr, ());
        let w = t.add_child(or, NodeType::Wait, ());
        let e = t.add_child(or, NodeType::Dtnu, ());
        let wor = t.add_child(w, NodeType::WOr, ());
        let and = t.add_child(wor, NodeType::And, ());
        let l1 = t.add_child(and, NodeType::Dtnu, ());
        let l2 = t.add_child(and, NodeType::Dtnu, ());

        t.set_truth(e, Truth::False);
        t.propagate_truth(e);
        assert_eq!(t.truth(or), Truth::Unknown);

        t.set_truth(l1, Truth::True);
        t.propagate_truth(l1);
        assert_eq!(t.truth(and), Truth::Unknown);

        t.set_truth(l2, Truth::True);
        t.propagate_truth(l2);
        assert_eq!(t.truth(Tree::<()>::ROOT), Truth::True);
        assert_eq!(t.evaluate(Tree::<()>::ROOT), Truth::True);
    }

    #[test]
    #[should_panic(expected = "would change")]
    fn truth_is_monotone() {
        let mut t = Tree::new(NodeType::Dtnu, ());
        t.set_truth(Tree::<()>::ROOT, Truth::True);
        t.set_truth(Tree::<()>::ROOT, Truth::False);
    }

    #[test]
    fn truncation() {
        let mut t = Tree::new(NodeType::DOr, ());
        let a = t.add_child(Tree::<()>::ROOT, NodeType::Dtnu, ());
        let b = t.add_child(Tree::<()>::ROOT, NodeType::Dtnu, ());
        t.add_child(b, NodeType::DOr, ());
        t.add_child(b, NodeType::DOr, ());
        assert_eq!(t.len(), 5);
        t.truncate_below(b);
        assert_eq!(t.len(), 3);
        assert!(t.children(b).is_empty());
        assert_eq!(t.children(Tree::<()>::ROOT), &[a, b]);
        assert_eq!(t.created(), 5);
    }
}
