use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::ModelError;

pub const NET_FORMAT: &str = "net-genome v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Input,
    Bias,
    Hidden,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Sigmoid, Activation::Tanh, Activation::Relu];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeGene {
    pub id: usize,
    pub role: NodeRole,
    pub activation: Activation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionGene {
    pub innovation: u64,
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub enabled: bool,
}

/// Topology-evolving feed-forward network.
///
/// Node ids are laid out as inputs `0..input_count`, the bias node at
/// `input_count`, outputs after it, then hidden nodes. The bias node always
/// emits 1. Output nodes squash with the logistic sigmoid so every output lies
/// in [0,1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetGenome {
    pub input_count: usize,
    pub output_count: usize,
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
}

impl NetGenome {
    /// Inputs, bias and outputs, with no connections.
    pub fn bare(input_count: usize, output_count: usize) -> Self {
        let mut nodes = Vec::with_capacity(input_count + 1 + output_count);
        for id in 0..input_count {
            nodes.push(NodeGene { id, role: NodeRole::Input, activation: Activation::Sigmoid });
        }
        nodes.push(NodeGene { id: input_count, role: NodeRole::Bias, activation: Activation::Sigmoid });
        for o in 0..output_count {
            nodes.push(NodeGene { id: input_count + 1 + o, role: NodeRole::Output, activation: Activation::Sigmoid });
        }
        NetGenome { input_count, output_count, nodes, connections: Vec::new() }
    }

    pub fn bias_id(&self) -> usize {
        self.input_count
    }

    pub fn output_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(|n| n.role == NodeRole::Output).map(|n| n.id)
    }

    pub fn node(&self, id: usize) -> Option<&NodeGene> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == NodeRole::Hidden).count()
    }

    /// Checks every structural invariant: unique ids, declared role counts,
    /// sigmoid outputs, endpoints that exist, nothing feeding an input or the
    /// bias, and an acyclic enabled graph.
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |m: String| Err(ModelError::Invalid(m));
        let mut roles = BTreeMap::new();
        for n in &self.nodes {
            if roles.insert(n.id, n.role).is_some() {
                return invalid(format!("duplicate node id {}", n.id));
            }
            if n.role == NodeRole::Output && n.activation != Activation::Sigmoid {
                return invalid(format!("output node {} must use sigmoid", n.id));
            }
        }
        let count = |r: NodeRole| self.nodes.iter().filter(|n| n.role == r).count();
        if count(NodeRole::Input) != self.input_count {
            return invalid(format!("expected {} input nodes, found {}", self.input_count, count(NodeRole::Input)));
        }
        if count(NodeRole::Output) != self.output_count {
            return invalid(format!("expected {} output nodes, found {}", self.output_count, count(NodeRole::Output)));
        }
        if count(NodeRole::Bias) != 1 {
            return invalid(format!("expected one bias node, found {}", count(NodeRole::Bias)));
        }
        for i in 0..self.input_count {
            if roles.get(&i) != Some(&NodeRole::Input) {
                return invalid(format!("node {i} must be an input"));
            }
        }
        if roles.get(&self.input_count) != Some(&NodeRole::Bias) {
            return invalid(format!("node {} must be the bias", self.input_count));
        }
        let mut innovations = BTreeSet::new();
        for c in &self.connections {
            if !innovations.insert(c.innovation) {
                return invalid(format!("duplicate innovation id {}", c.innovation));
            }
            if !roles.contains_key(&c.from) || !roles.contains_key(&c.to) {
                return invalid(format!("connection {} references a missing node", c.innovation));
            }
            if matches!(roles[&c.to], NodeRole::Input | NodeRole::Bias) {
                return invalid(format!("connection {} feeds input/bias node {}", c.innovation, c.to));
            }
            if !c.weight.is_finite() {
                return invalid(format!("connection {} has a non-finite weight", c.innovation));
            }
        }
        self.topological_order().map(|_| ())
    }

    /// Kahn's algorithm over the enabled connections. Ties resolve by node
    /// id so the order is a function of structure alone.
    pub fn topological_order(&self) -> Result<Vec<usize>, ModelError> {
        let mut indegree: BTreeMap<usize, usize> = self.nodes.iter().map(|n| (n.id, 0)).collect();
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for c in self.connections.iter().filter(|c| c.enabled) {
            *indegree.get_mut(&c.to).ok_or(ModelError::Invalid(format!("missing node {}", c.to)))? += 1;
            out.entry(c.from).or_default().push(c.to);
        }
        let mut ready: BTreeSet<usize> = indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_first() {
            order.push(id);
            for &to in out.get(&id).into_iter().flatten() {
                let d = indegree.get_mut(&to).expect("node exists");
                *d -= 1;
                if *d == 0 {
                    ready.insert(to);
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(ModelError::Cyclic);
        }
        Ok(order)
    }

    /// True when `to` can reach `from` through any connection (enabled or
    /// not), i.e. adding `from -> to` would close a cycle.
    pub fn creates_cycle(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([to]);
        while let Some(n) = queue.pop_front() {
            if n == from {
                return true;
            }
            if seen.insert(n) {
                queue.extend(self.connections.iter().filter(|c| c.from == n).map(|c| c.to));
            }
        }
        false
    }

    pub fn compile(&self) -> Result<CompiledNet, ModelError> {
        let order = self.topological_order()?;
        let slot: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); order.len()];
        for c in self.connections.iter().filter(|c| c.enabled) {
            incoming[slot[&c.to]].push((slot[&c.from], c.weight));
        }
        let mut steps = Vec::new();
        let mut input_slots = vec![0; self.input_count];
        let mut bias_slot = 0;
        let mut output_slots = Vec::new();
        for (i, id) in order.iter().enumerate() {
            let node = self.node(*id).expect("ordered ids exist");
            match node.role {
                NodeRole::Input => input_slots[node.id] = i,
                NodeRole::Bias => bias_slot = i,
                NodeRole::Hidden | NodeRole::Output => {
                    let activation = if node.role == NodeRole::Output { Activation::Sigmoid } else { node.activation };
                    steps.push(Step { slot: i, activation, incoming: std::mem::take(&mut incoming[i]) });
                    if node.role == NodeRole::Output {
                        output_slots.push((node.id, i));
                    }
                }
            }
        }
        output_slots.sort_unstable();
        Ok(CompiledNet {
            input_slots,
            bias_slot,
            steps,
            output_slots: output_slots.into_iter().map(|(_, s)| s).collect(),
            width: order.len(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetDocRef { format: NET_FORMAT, genome: self }).expect("genome serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: NetDoc = serde_json::from_str(text)?;
        if doc.format != NET_FORMAT {
            return Err(ModelError::Format(format!("expected `{NET_FORMAT}`, found `{}`", doc.format)));
        }
        doc.genome.validate()?;
        Ok(doc.genome)
    }
}

#[derive(Serialize)]
struct NetDocRef<'a> {
    format: &'a str,
    genome: &'a NetGenome,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetDoc {
    format: String,
    genome: NetGenome,
}

#[derive(Clone, Debug)]
struct Step {
    slot: usize,
    activation: Activation,
    incoming: Vec<(usize, f64)>,
}

/// A genome flattened into evaluation order.
#[derive(Clone, Debug)]
pub struct CompiledNet {
    input_slots: Vec<usize>,
    bias_slot: usize,
    steps: Vec<Step>,
    output_slots: Vec<usize>,
    width: usize,
}

impl CompiledNet {
    pub fn input_count(&self) -> usize {
        self.input_slots.len()
    }

    /// All outputs, ordered by node id.
    pub fn eval_all(&self, inputs: &[f64]) -> Result<Vec<f64>, ModelError> {
        if inputs.len() != self.input_slots.len() {
            return Err(ModelError::Arity { expected: self.input_slots.len(), got: inputs.len() });
        }
        let mut values = vec![0.0; self.width];
        for (&slot, &x) in self.input_slots.iter().zip(inputs) {
            values[slot] = x;
        }
        values[self.bias_slot] = 1.0;
        for step in &self.steps {
            let sum: f64 = step.incoming.iter().map(|&(src, w)| values[src] * w).sum();
            values[step.slot] = step.activation.apply(sum);
        }
        Ok(self.output_slots.iter().map(|&s| values[s]).collect())
    }

    /// First output; the decision models are single-output.
    pub fn eval(&self, inputs: &[f64]) -> Result<f64, ModelError> {
        Ok(self.eval_all(inputs)?[0])
    }
}

/// Evaluates the genome's first output on `inputs`; result lies in [0,1].
pub fn ann_forward(genome: &NetGenome, inputs: &[f64]) -> Result<f64, ModelError> {
    if inputs.len() != genome.input_count {
        return Err(ModelError::Arity { expected: genome.input_count, got: inputs.len() });
    }
    genome.compile()?.eval(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conn(innovation: u64, from: usize, to: usize, weight: f64) -> ConnectionGene {
        ConnectionGene { innovation, from, to, weight, enabled: true }
    }

    #[test]
    fn connectionless_genome_outputs_one_half() {
        let g = NetGenome::bare(3, 1);
        g.validate().unwrap();
        assert_eq!(ann_forward(&g, &[0.1, 0.7, 0.3]).unwrap(), 0.5);
    }

    #[test]
    fn single_connection_is_sigmoid_of_weighted_input() {
        let mut g = NetGenome::bare(1, 1);
        g.connections.push(conn(0, 0, 2, 1.0));
        assert_eq!(ann_forward(&g, &[0.0]).unwrap(), 0.5);
        g.connections[0].weight = 2.0;
        assert!((ann_forward(&g, &[0.75]).unwrap() - sigmoid(1.5)).abs() < 1e-15);
    }

    #[test]
    fn bias_contributes_one() {
        let mut g = NetGenome::bare(1, 1);
        g.connections.push(conn(0, 1, 2, -3.0));
        assert!((ann_forward(&g, &[0.9]).unwrap() - sigmoid(-3.0)).abs() < 1e-15);
    }

    #[test]
    fn wrong_arity_and_cycles_are_errors() {
        let mut g = NetGenome::bare(2, 1);
        assert!(matches!(ann_forward(&g, &[0.0]), Err(ModelError::Arity { expected: 2, got: 1 })));
        g.nodes.push(NodeGene { id: 4, role: NodeRole::Hidden, activation: Activation::Tanh });
        g.nodes.push(NodeGene { id: 5, role: NodeRole::Hidden, activation: Activation::Relu });
        g.connections.extend([conn(0, 4, 5, 1.0), conn(1, 5, 4, 1.0)]);
        assert!(matches!(ann_forward(&g, &[0.0, 0.0]), Err(ModelError::Cyclic)));
        // a disabled back edge is harmless
        g.connections[1].enabled = false;
        g.validate().unwrap();
    }

    #[test]
    fn structural_violations() {
        let mut g = NetGenome::bare(2, 1);
        g.connections.push(conn(0, 3, 0, 1.0));
        assert!(g.validate().is_err());
        let mut g = NetGenome::bare(2, 1);
        g.connections.extend([conn(0, 0, 3, 1.0), conn(0, 1, 3, 1.0)]);
        assert!(g.validate().is_err());
        let mut g = NetGenome::bare(2, 1);
        g.nodes[3].activation = Activation::Relu;
        assert!(g.validate().is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut g = NetGenome::bare(2, 1);
        g.nodes.push(NodeGene { id: 4, role: NodeRole::Hidden, activation: Activation::Tanh });
        g.connections.extend([conn(0, 0, 4, 0.1 + 0.2), conn(1, 4, 3, -1.0 / 3.0), conn(2, 1, 3, 1e-300)]);
        g.connections[0].enabled = false;
        let text = g.to_json();
        assert!(text.contains("\"net-genome v1\""));
        let back = NetGenome::from_json(&text).unwrap();
        assert_eq!(back, g);
        for (a, b) in back.connections.iter().zip(&g.connections) {
            assert_eq!(a.weight.to_bits(), b.weight.to_bits());
        }
        assert!(NetGenome::from_json(&text.replace("net-genome v1", "net-genome v2")).is_err());
    }
}
