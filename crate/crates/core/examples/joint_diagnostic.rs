//! Compares conditional-factor SVs with a game whose players are the leaf
//! probabilities themselves. A leaf whose probability does not move still
//! gets credit in the joint game.

use shapshift::conditionals::ConditionalTable;
use shapshift::shapley::{exact_shapley, joint_sv_diagnostic, LeafValues};
use shapshift::tree::{DecisionTree, Node};

fn main() -> shapshift::Result<()> {
    let v = [1.0, 0.5, 0.2, 0.0];
    let tree = DecisionTree::from_nodes(
        &[
            Node::Split { feature: 0, threshold: 0.0, left: 1, right: 4 },
            Node::Split { feature: 1, threshold: 0.0, left: 2, right: 3 },
            Node::Leaf { value: v[0] },
            Node::Leaf { value: v[1] },
            Node::Split { feature: 2, threshold: 0.0, left: 5, right: 6 },
            Node::Leaf { value: v[2] },
            Node::Leaf { value: v[3] },
        ],
        0,
        3,
    )?;
    let table = ConditionalTable::from_probabilities(&tree, None, vec![0.5, 0.5, 0.5], vec![0.6, 0.5, 0.375])?;
    let cond = exact_shapley(&table, &LeafValues::from_tree(&tree), false)?;
    println!("conditional game (shift {:+.4}):", cond.shift());
    for f in &cond.factors {
        println!("  {:+.4}  {}  {:.3} -> {:.3}", f.sv, f.conditional.label, f.p_prob, f.q_prob);
    }

    let p = [0.25; 4];
    let q = [0.3, 0.3, 0.15, 0.25];
    let joint = joint_sv_diagnostic(&p, &q, &v)?;
    println!("joint leaf game:");
    for (l, sv) in joint.iter().enumerate() {
        println!("  {sv:+.4}  leaf {l}  {:.3} -> {:.3}", p[l], q[l]);
    }
    Ok(())
}
