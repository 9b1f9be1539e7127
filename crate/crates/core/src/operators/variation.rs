//! Patch-level variation: random edits, mutation and crossover.

use rand::Rng;

use super::cache::{class_cache_targets, method_cache_targets};
use crate::minilang::{callee_return_type, walk_block, NodeId, Program, Type};
use crate::patch::{block_len_containing, Edit, EditKind, Patch};

/// Everything a random edit may refer to, precomputed from the original
/// program. Test functions contribute nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditSpace {
    pub statements: Vec<NodeId>,
    /// Length of the block holding each entry of `statements`.
    block_lens: Vec<usize>,
    pub method_calls: Vec<NodeId>,
    pub class_calls: Vec<NodeId>,
}

impl EditSpace {
    pub fn new(program: &Program) -> Self {
        let mut statements = Vec::new();
        for func in program.functions.iter().filter(|f| !f.is_test()) {
            walk_block(&func.body, &mut |stmt| statements.extend(stmt.id));
        }
        let block_lens = statements
            .iter()
            .map(|&id| block_len_containing(program, id).expect("statement collected from program"))
            .collect();
        let returns_value = |call: NodeId| {
            let mut callee = None;
            for func in &program.functions {
                walk_block(&func.body, &mut |stmt| {
                    for e in stmt.own_exprs() {
                        e.visit_calls(&mut |c| {
                            if c.id == Some(call) {
                                callee = Some(c.callee.clone());
                            }
                        });
                    }
                });
            }
            callee
                .and_then(|c| callee_return_type(program, &c))
                .is_some_and(|t| t != Type::Void)
        };
        let method_calls = method_cache_targets(program)
            .into_iter()
            .map(|t| t.call)
            .filter(|&c| returns_value(c))
            .collect();
        let class_calls = class_cache_targets(program)
            .into_iter()
            .map(|t| t.call)
            .filter(|&c| returns_value(c))
            .collect();
        EditSpace {
            statements,
            block_lens,
            method_calls,
            class_calls,
        }
    }

    /// Edit kinds with at least one valid target.
    pub fn kinds(&self) -> Vec<EditKind> {
        EditKind::ALL
            .into_iter()
            .filter(|k| match k {
                EditKind::Delete | EditKind::Copy => !self.statements.is_empty(),
                EditKind::Replace => self.statements.len() >= 2,
                EditKind::CacheMethod => !self.method_calls.is_empty(),
                EditKind::CacheClass => !self.class_calls.is_empty(),
            })
            .collect()
    }

    /// Kind uniform over [`Self::kinds`], then target uniform. `None` when
    /// the program has no editable statement.
    pub fn random_edit<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Edit> {
        let kinds = self.kinds();
        if kinds.is_empty() {
            return None;
        }
        let pick = |rng: &mut R, ids: &[NodeId]| ids[rng.random_range(0..ids.len())];
        let edit = match kinds[rng.random_range(0..kinds.len())] {
            EditKind::Delete => Edit::Delete {
                target: pick(rng, &self.statements),
            },
            EditKind::Copy => {
                let source = pick(rng, &self.statements);
                let anchor = rng.random_range(0..self.statements.len());
                let index = rng.random_range(0..=self.block_lens[anchor]);
                Edit::Copy {
                    source,
                    dest_block: self.statements[anchor],
                    index,
                }
            }
            EditKind::Replace => {
                // Distinct source and target; replacing a statement by itself
                // is not a change.
                let n = self.statements.len();
                let source = rng.random_range(0..n);
                let target = (source + rng.random_range(1..n)) % n;
                Edit::Replace {
                    source: self.statements[source],
                    target: self.statements[target],
                }
            }
            EditKind::CacheMethod => Edit::CacheMethod {
                call: pick(rng, &self.method_calls),
            },
            EditKind::CacheClass => Edit::CacheClass {
                call: pick(rng, &self.class_calls),
            },
        };
        Some(edit)
    }

    /// Adds a random edit or removes a random one, 50/50; an empty patch
    /// always gets an add.
    pub fn mutate<R: Rng + ?Sized>(&self, patch: &Patch, rng: &mut R) -> Patch {
        let mut out = patch.clone();
        if out.is_empty() || rng.random_bool(0.5) {
            if let Some(edit) = self.random_edit(rng) {
                out.edits.push(edit);
            }
        } else {
            let i = rng.random_range(0..out.edits.len());
            out.edits.remove(i);
        }
        out
    }
}

pub fn random_edit<R: Rng + ?Sized>(program: &Program, rng: &mut R) -> Option<Edit> {
    EditSpace::new(program).random_edit(rng)
}

pub fn mutate<R: Rng + ?Sized>(patch: &Patch, program: &Program, rng: &mut R) -> Patch {
    EditSpace::new(program).mutate(patch, rng)
}

/// The edits of `a` followed by those of `b`.
pub fn crossover(a: &Patch, b: &Patch) -> Patch {
    Patch::new(a.edits.iter().chain(&b.edits).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    const CALLS: &str = "\
fn a(n: int) -> int { return n + 1; }
fn v() {}
fn f(n: int) -> int {
    var x: int = a(n);
    var y: int = a(n);
    v();
    return x + y;
}
fn test_f() { assert(f(1) == 4); }
";

    #[test]
    fn empty_patch_always_grows() {
        let p = parse(CALLS).unwrap();
        let space = EditSpace::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(space.mutate(&Patch::empty(), &mut rng).len(), 1);
        }
    }

    #[test]
    fn add_remove_split_is_even() {
        let p = parse(CALLS).unwrap();
        let space = EditSpace::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = Patch::new(
            (0..5)
                .map(|_| space.random_edit(&mut rng).unwrap())
                .collect(),
        );
        let adds = (0..10_000)
            .filter(|_| space.mutate(&base, &mut rng).len() == 6)
            .count();
        let ratio = adds as f64 / 10_000.0;
        assert!((ratio - 0.5).abs() <= 0.02, "{ratio}");
    }

    #[test]
    fn no_calls_no_cache_edits() {
        let p = parse("fn f() -> int { var a: int = 1; return a; }").unwrap();
        let space = EditSpace::new(&p);
        assert_eq!(
            space.kinds(),
            vec![EditKind::Delete, EditKind::Copy, EditKind::Replace]
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let e = space.random_edit(&mut rng).unwrap();
            assert!(matches!(
                e.kind(),
                EditKind::Delete | EditKind::Copy | EditKind::Replace
            ));
            if let Edit::Replace { source, target } = e {
                assert_ne!(source, target);
            }
        }
    }

    #[test]
    fn single_statement_has_no_replace() {
        let p = parse("fn f() -> int { return 1; }").unwrap();
        assert_eq!(
            EditSpace::new(&p).kinds(),
            vec![EditKind::Delete, EditKind::Copy]
        );
    }

    #[test]
    fn every_kind_drawn() {
        let p = parse(CALLS).unwrap();
        let space = EditSpace::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let kinds: BTreeSet<EditKind> = (0..100_000)
            .map(|_| space.random_edit(&mut rng).unwrap().kind())
            .collect();
        assert_eq!(kinds.len(), 5);
    }

    #[test]
    fn void_calls_and_tests_are_not_targets() {
        let p = parse(CALLS).unwrap();
        let space = EditSpace::new(&p);
        // a(n) at 2 and 4; v() at 6; the test body (8, 9) is skipped.
        assert_eq!(space.method_calls, vec![NodeId(2)]);
        assert_eq!(space.class_calls, vec![NodeId(2)]);
        assert_eq!(
            space.statements,
            vec![NodeId(0), NodeId(1), NodeId(3), NodeId(5), NodeId(7)]
        );
    }

    #[test]
    fn crossover_cases() {
        let e1 = Edit::Delete { target: NodeId(1) };
        let e2 = Edit::CacheClass { call: NodeId(2) };
        let x = Patch::new(vec![e1]);
        assert_eq!(crossover(&Patch::empty(), &x), x);
        assert_eq!(
            crossover(&x, &Patch::new(vec![e2])),
            Patch::new(vec![e1, e2])
        );
    }

    fn arb_edit() -> impl Strategy<Value = Edit> {
        (0u32..50, 0u32..50, 0usize..10).prop_map(|(a, b, i)| Edit::Copy {
            source: NodeId(a),
            dest_block: NodeId(b),
            index: i,
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn crossover_length_adds(x in prop::collection::vec(arb_edit(), 0..8), y in prop::collection::vec(arb_edit(), 0..8)) {
            let (a, b) = (Patch::new(x), Patch::new(y));
            prop_assert_eq!(crossover(&a, &b).len(), a.len() + b.len());
        }
    }
}
