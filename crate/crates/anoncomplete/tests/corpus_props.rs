//! Property tests for the corpus layer: flatten against a brute-force
//! preorder oracle, chunk reassembly, vocabulary totality, and the
//! anonymizer's consistency guarantees.

use proptest::prelude::*;

use anoncomplete::anonymize::anonymize_program;
use anoncomplete::corpus::{
    chunk, flatten, AstNode, FlatProgram, InternTable, NUM_RESERVED, UNK_ID,
};
use anoncomplete::rng::Rng;

/// Random tree as (node count, per-node value flag); children are attached
/// to random earlier nodes, so index order is a valid preorder-compatible
/// topological order but NOT necessarily preorder itself.
fn arb_tree() -> impl Strategy<Value = Vec<AstNode>> {
    (2usize..40, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = Rng::new(seed);
        let mut nodes: Vec<AstNode> = (0..n)
            .map(|_| AstNode {
                type_name: format!("T{}", rng.below(6)),
                value: None,
                children: Vec::new(),
            })
            .collect();
        for i in 1..n {
            let parent = rng.below(i);
            nodes[parent].children.push(i);
        }
        for i in 0..n {
            if nodes[i].children.is_empty() && rng.chance(0.7) {
                nodes[i].value = Some(format!("v{}", rng.below(12)));
            }
        }
        nodes
    })
}

/// Independent oracle: recursive preorder walk collecting (node index,
/// parent flat position), entirely separate from `flatten`'s stack logic.
fn preorder_oracle(nodes: &[AstNode]) -> Vec<(usize, i32)> {
    fn walk(
        nodes: &[AstNode],
        idx: usize,
        parent_flat: i32,
        out: &mut Vec<(usize, i32)>,
    ) {
        let my_flat = out.len() as i32;
        out.push((idx, parent_flat));
        for &c in &nodes[idx].children {
            walk(nodes, c, my_flat, out);
        }
    }
    let mut out = Vec::new();
    walk(nodes, 0, -1, &mut out);
    out
}

proptest! {
    #[test]
    fn flatten_matches_preorder_oracle(tree in arb_tree()) {
        let mut intern = InternTable::new();
        let fp = flatten(&tree, &mut intern).expect("valid tree");
        let oracle = preorder_oracle(&tree);
        // One EOF token follows the tree.
        prop_assert_eq!(fp.len(), oracle.len() + 1);
        for (flat_pos, &(node_idx, parent_flat)) in oracle.iter().enumerate() {
            prop_assert_eq!(fp.parent[flat_pos], parent_flat);
            let type_name = intern.types.name(fp.tokens[flat_pos].0);
            prop_assert_eq!(type_name, tree[node_idx].type_name.as_str());
            match &tree[node_idx].value {
                Some(v) => prop_assert_eq!(intern.values.name(fp.orig[flat_pos]), v.as_str()),
                None => prop_assert_eq!(fp.orig[flat_pos], 0),
            }
        }
        // Child counts reconstructed from parent links match the tree shape.
        let mut child_counts = vec![0usize; fp.len()];
        for &p in &fp.parent {
            if p >= 0 {
                child_counts[p as usize] += 1;
            }
        }
        for (flat_pos, &(node_idx, _)) in oracle.iter().enumerate() {
            prop_assert_eq!(child_counts[flat_pos], tree[node_idx].children.len());
        }
    }

    #[test]
    fn flatten_is_deterministic(tree in arb_tree()) {
        let mut i1 = InternTable::new();
        let mut i2 = InternTable::new();
        let a = flatten(&tree, &mut i1).unwrap();
        let b = flatten(&tree, &mut i2).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn chunks_reassemble_exactly(tree in arb_tree(), window in 1usize..9) {
        let mut intern = InternTable::new();
        let fp = flatten(&tree, &mut intern).unwrap();
        let chunks = chunk(&fp, window);
        let tokens: Vec<(u32, u32)> = chunks.iter().flat_map(|c| c.tokens.clone()).collect();
        let orig: Vec<u32> = chunks.iter().flat_map(|c| c.orig.clone()).collect();
        prop_assert_eq!(tokens, fp.tokens.clone());
        prop_assert_eq!(orig, fp.orig.clone());
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(c.carry, i > 0);
            if i + 1 < chunks.len() {
                prop_assert_eq!(c.len(), window);
            }
        }
    }

    #[test]
    fn anonymization_preserves_equality_structure(
        values in proptest::collection::vec(0u32..10, 1..60),
        k in 1usize..8,
        seed in any::<u64>(),
    ) {
        // Build a program whose origs are drawn from a small id pool.
        let orig: Vec<u32> = values.iter().map(|&v| if v < 3 { v } else { v + 100 }).collect();
        let mut p = FlatProgram {
            tokens: orig.iter().map(|&o| (3, o)).collect(),
            orig: orig.clone(),
            parent: vec![-1; orig.len()],
        };
        let mut rng = Rng::new(seed);
        anonymize_program(&mut p, k, &mut rng, None, None).unwrap();

        // Distinct non-dummy origs in first-appearance order.
        let mut firsts: Vec<u32> = Vec::new();
        for &o in &orig {
            if o >= 3 && !firsts.contains(&o) {
                firsts.push(o);
            }
        }
        for (i, &o) in orig.iter().enumerate() {
            let got = p.tokens[i].1;
            if o < 3 {
                prop_assert_eq!(got, o, "dummies unchanged");
                continue;
            }
            let rank = firsts.iter().position(|&f| f == o).unwrap();
            if rank < k {
                prop_assert!(got >= NUM_RESERVED, "first K distinct get placeholders");
            } else {
                prop_assert_eq!(got, UNK_ID, "overflow maps to UNK");
            }
        }
        // Same orig -> same output; distinct placeholder-mapped origs differ.
        for i in 0..orig.len() {
            for j in (i + 1)..orig.len() {
                if orig[i] == orig[j] {
                    prop_assert_eq!(p.tokens[i].1, p.tokens[j].1);
                } else if p.tokens[i].1 >= NUM_RESERVED && p.tokens[j].1 >= NUM_RESERVED {
                    prop_assert_ne!(p.tokens[i].1, p.tokens[j].1);
                }
            }
        }
    }

    #[test]
    fn reanonymization_differs_only_by_relabeling(
        values in proptest::collection::vec(3u32..12, 1..50),
        seed_a in any::<u64>(),
        seed_b in any::<u64>(),
    ) {
        let orig: Vec<u32> = values.iter().map(|&v| v + 100).collect();
        let base = FlatProgram {
            tokens: orig.iter().map(|&o| (3, o)).collect(),
            orig: orig.clone(),
            parent: vec![-1; orig.len()],
        };
        let k = 12;
        let canonical = |seed: u64| {
            let mut p = base.clone();
            let mut rng = Rng::new(seed);
            anonymize_program(&mut p, k, &mut rng, None, None).unwrap();
            // Relabel placeholders in first-appearance order.
            let mut order: Vec<u32> = Vec::new();
            p.tokens
                .iter()
                .map(|&(_, v)| {
                    if v < NUM_RESERVED {
                        v
                    } else {
                        let rank = match order.iter().position(|&x| x == v) {
                            Some(r) => r,
                            None => {
                                order.push(v);
                                order.len() - 1
                            }
                        };
                        NUM_RESERVED + rank as u32
                    }
                })
                .collect::<Vec<u32>>()
        };
        prop_assert_eq!(canonical(seed_a), canonical(seed_b));
    }
}

#[test]
fn vocabulary_resolution_is_total() {
    use anoncomplete::corpus::build_vocabulary;
    let mut intern = InternTable::new();
    let tree = vec![AstNode {
        type_name: "Leaf".into(),
        value: Some("only".into()),
        children: vec![],
    }];
    let fp = flatten(&tree, &mut intern).unwrap();
    let vocab = build_vocabulary(&[fp], &intern, 5);
    for s in ["only", "never-seen", "", "<weird>", "名前"] {
        let id = vocab.resolve_value(s);
        assert!(id < vocab.num_values() as u32);
    }
}
