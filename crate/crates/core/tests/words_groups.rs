//! Words and group evaluation checked against independent arithmetic.

mod common;

use boxspace::element::{canonical_projective, Element, FiniteMatrix, ShiftMatrix, ShiftPerm};
use boxspace::groups::{hadad_generators, order_of_generator, GeneratorOrder, GroupSpec, MarkedGroup};
use boxspace::ring::Ring;
use boxspace::words::{ball_size, enumerate_ball, letters, reduce, Letter, Word};
use boxspace::Error;
use common::{eval_sl, group, random_word, Mat};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stack-based free reduction, written independently of the library.
fn naive_reduce(raw: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::new();
    for &x in raw {
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

#[test]
fn word_examples() {
    assert_eq!(reduce(2, &[1, 2, -2, -1, 1]).unwrap().to_string(), "s1");
    assert_eq!(reduce(3, &[]).unwrap().to_string(), "e");
    let a = Word::parse(2, "s1.s2").unwrap();
    let b = Word::parse(2, "S2.s1").unwrap();
    assert_eq!(a.concat(&b).unwrap().to_string(), "s1.s1");
    assert_eq!(Word::parse(2, "s1.S2.s2").unwrap().invert().to_string(), "S1");
    assert!(matches!(reduce(2, &[3]), Err(Error::Arity(_))));
    assert!(matches!(
        Word::parse(2, "s1").unwrap().concat(&Word::parse(3, "s1").unwrap()),
        Err(Error::Arity(_))
    ));
    assert_eq!(ball_size(2, 1), Some(5));
    assert_eq!(ball_size(2, 2), Some(17));
    assert_eq!(ball_size(1, 3), Some(7));
}

#[test]
fn ball_sizes_match_brute_force() {
    for k in 1..=3usize {
        for r in 0..=6usize {
            let expected = if r == 0 {
                1
            } else {
                1 + (0..r).map(|i| 2 * k * (2 * k - 1).pow(i as u32)).sum::<usize>()
            };
            let ball = enumerate_ball(k, r, 1 << 20).unwrap();
            assert_eq!(ball.len(), expected, "k={k} r={r}");
            assert_eq!(ball_size(k, r), Some(expected as u128));
            assert!(ball.windows(2).all(|w| w[0] < w[1]), "shortlex order k={k} r={r}");
            if r <= 3 {
                // every raw letter string of length <= r reduces into the ball
                let alphabet = letters(k);
                let mut layer: Vec<Vec<Letter>> = vec![vec![]];
                for _ in 0..r {
                    layer = layer
                        .iter()
                        .flat_map(|w| alphabet.iter().map(move |&x| {
                            let mut v = w.clone();
                            v.push(x);
                            v
                        }))
                        .collect();
                    for raw in &layer {
                        let w = reduce(k, raw).unwrap();
                        assert!(ball.binary_search(&w).is_ok());
                    }
                }
            }
        }
    }
    assert!(matches!(enumerate_ball(3, 20, 1000), Err(Error::CapExceeded(_))));
}

proptest! {
    #[test]
    fn reduce_agrees_with_stack_oracle(raw in prop::collection::vec((1i32..=3, any::<bool>()), 0..40)) {
        let raw: Vec<Letter> = raw.into_iter().map(|(g, s)| if s { g } else { -g }).collect();
        let w = reduce(3, &raw).unwrap();
        prop_assert_eq!(w.letters().to_vec(), naive_reduce(&raw));
        prop_assert_eq!(reduce(3, w.letters()).unwrap(), w.clone());
        prop_assert!(w.concat(&w.invert()).unwrap().is_empty());
        prop_assert_eq!(w.invert().invert(), w);
    }

    #[test]
    fn concat_length_parity(a in prop::collection::vec((1i32..=2, any::<bool>()), 0..20),
                            b in prop::collection::vec((1i32..=2, any::<bool>()), 0..20)) {
        let to = |v: Vec<(i32, bool)>| reduce(2, &v.into_iter().map(|(g, s)| if s { g } else { -g }).collect::<Vec<_>>()).unwrap();
        let (a, b) = (to(a), to(b));
        let ab = a.concat(&b).unwrap();
        prop_assert_eq!((a.len() + b.len() - ab.len()) % 2, 0);
        prop_assert!(ab.len() <= a.len() + b.len());
        prop_assert_eq!(Word::parse(2, &ab.to_string()).unwrap(), ab);
    }
}

#[test]
fn sl_evaluation_matches_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (m, k) in [(3usize, 2u64), (3, 6), (5, 3), (7, 17), (9, 4)] {
        let g = group(&format!("sl:m={m},ring=zmod{k},gens=stu"));
        for _ in 0..100 {
            let w = random_word(&mut rng, 3, 20);
            let Element::Matrix(x) = g.evaluate(&w).unwrap() else {
                panic!("expected a matrix")
            };
            let o = eval_sl(&w, m, k as i128);
            let got: Vec<i128> = x.entries.iter().map(|&v| v as i128).collect();
            assert_eq!(got, o.a, "sl({m},{k}) word {w}");
        }
    }
}

#[test]
fn sym_evaluation_matches_permutation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for m in [3usize, 5, 8] {
        let g = group(&format!("sym:m={m}"));
        let sigma: Vec<usize> = (0..m).map(|j| (j + 1) % m).collect();
        let sigma_inv: Vec<usize> = (0..m).map(|j| (j + m - 1) % m).collect();
        let tau: Vec<usize> = (0..m).map(|j| [1, 0].get(j).copied().unwrap_or(j)).collect();
        for _ in 0..100 {
            let w = random_word(&mut rng, 2, 25);
            // acting on points: the rightmost letter acts first
            let image: Vec<u32> = (0..m)
                .map(|p| {
                    w.letters().iter().rev().fold(p, |q, &x| match x {
                        1 => sigma[q],
                        -1 => sigma_inv[q],
                        _ => tau[q],
                    }) as u32
                })
                .collect();
            assert_eq!(g.evaluate(&w).unwrap(), Element::Permutation(image), "sym({m}) word {w}");
        }
    }
}

#[test]
fn limit_sym_matches_point_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = group("limit:sym");
    assert_eq!(
        g.evaluate(&Word::parse(2, "s1").unwrap()).unwrap(),
        Element::ShiftPermutation(ShiftPerm {
            shift: 1,
            moved: Default::default()
        })
    );
    for _ in 0..200 {
        let w = random_word(&mut rng, 2, 20);
        let Element::ShiftPermutation(e) = g.evaluate(&w).unwrap() else {
            panic!("expected a shift permutation")
        };
        for p in -40i64..40 {
            let q = w.letters().iter().rev().fold(p, |q, &x| match x {
                1 => q + 1,
                -1 => q - 1,
                _ => match q {
                    0 => 1,
                    1 => 0,
                    _ => q,
                },
            });
            assert_eq!(e.apply(p), q, "word {w} at {p}");
        }
        assert!(e.moved.iter().all(|(j, v)| j != v), "support excludes fixed points");
        let shift: i64 = w.letters().iter().map(|&x| i64::from(x == 1) - i64::from(x == -1)).sum();
        assert_eq!(e.shift, shift);
    }
}

#[test]
fn psl2_matches_projective_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for p in [3i128, 5, 7, 13] {
        let g = group(&format!("psl2:p={p}"));
        let gens = |x: Letter| -> [i128; 4] {
            match x {
                1 => [1, 1, 0, 1],
                -1 => [1, p - 1, 0, 1],
                2 => [0, 1, p - 1, 0],
                _ => [0, p - 1, 1, 0],
            }
        };
        for _ in 0..100 {
            let w = random_word(&mut rng, 2, 20);
            let m = w.letters().iter().fold([1i128, 0, 0, 1], |a, &x| {
                let b = gens(x);
                [
                    (a[0] * b[0] + a[1] * b[2]).rem_euclid(p),
                    (a[0] * b[1] + a[1] * b[3]).rem_euclid(p),
                    (a[2] * b[0] + a[3] * b[2]).rem_euclid(p),
                    (a[2] * b[1] + a[3] * b[3]).rem_euclid(p),
                ]
            });
            let Element::ProjMatrix { entries, .. } = g.evaluate(&w).unwrap() else {
                panic!("expected a projective matrix")
            };
            let plus: Vec<i128> = m.to_vec();
            let minus: Vec<i128> = m.iter().map(|v| (-v).rem_euclid(p)).collect();
            let got: Vec<i128> = entries.iter().map(|&v| v as i128).collect();
            assert!(got == plus || got == minus, "psl2({p}) word {w}");
        }
    }
}

/// Entries of an element of `Z |x| SL(inf, Z)` read off a cyclic `Z`-matrix of
/// size 61 whose indices are `-30..=30`.
fn shift_oracle(w: &Word) -> Mat {
    eval_sl(w, 61, 0)
}

fn oracle_entry(o: &Mat, i: i64, j: i64) -> i128 {
    let r = |x: i64| x.rem_euclid(61) as usize;
    o.a[r(i) * 61 + r(j)]
}

#[test]
fn gl_shift_matches_cyclic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let g = group("limit:gl-shift,ring=int,gens=stu");
    let mut words: Vec<Word> = (0..150).map(|_| random_word(&mut rng, 3, 12)).collect();
    words.push(Word::parse(3, "s2.s3.S2.S3").unwrap());
    for w in &words {
        let Element::ShiftMatrix(e) = g.evaluate(w).unwrap() else {
            panic!("expected a shift matrix")
        };
        let o = shift_oracle(w);
        for i in -12i64..=12 {
            for j in -12i64..=12 {
                assert_eq!(e.entry(i, j), BigInt::from(oracle_entry(&o, i, j)), "word {w} at ({i},{j})");
            }
        }
    }
}

#[test]
fn commutators_of_elementary_matrices() {
    // [e_{0,1}, sigma e_{0,1} sigma^{-1}] = [e_{0,1}, e_{1,2}] = e_{0,2}
    let w = Word::parse(3, "s2.s1.s2.S1.S2.s1.S2.S1").unwrap();
    let finite = group("sl:m=7,ring=zmod5,gens=stu").evaluate(&w).unwrap();
    assert_eq!(
        finite,
        Element::Matrix(FiniteMatrix::elementary(Ring::ZMod(5), 7, 0, 2, 1))
    );
    let limit = group("limit:gl-shift,ring=int,gens=stu").evaluate(&w).unwrap();
    assert_eq!(
        limit,
        Element::ShiftMatrix(ShiftMatrix::elementary(Ring::ArbInt, 0, 2, BigInt::from(1)))
    );
    // the literal tau.upsilon.tau^-1.upsilon^-1 is not elementary
    let lit = group("limit:gl-shift,ring=int,gens=stu")
        .evaluate(&Word::parse(3, "s2.s3.S2.S3").unwrap())
        .unwrap();
    let Element::ShiftMatrix(lit) = lit else { panic!() };
    assert_eq!((lit.shift, lit.lo, lit.size), (0, 0, 2));
    assert_eq!(lit.block, [3, -1, 1, 0].map(BigInt::from).to_vec());
}

#[test]
fn limit_reduction_matches_finite_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let limit = group("limit:gl-shift,ring=int,gens=stu");
    for k in [2u64, 3, 17] {
        let finite = group(&format!("sl:m=19,ring=zmod{k},gens=stu"));
        for _ in 0..100 {
            let w = random_word(&mut rng, 3, 8);
            let Element::ShiftMatrix(e) = limit.evaluate(&w).unwrap() else { panic!() };
            let folded = e.fold_to_finite(19, Ring::ZMod(k)).expect("window fits");
            assert_eq!(Element::Matrix(folded), finite.evaluate(&w).unwrap(), "k={k} word {w}");
        }
    }
}

#[test]
fn homomorphism_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for text in [
        "sym:m=6",
        "cycle:n=9",
        "cycle:n=5,gens=all",
        "psl2:p=11",
        "sl:m=5,ring=zmod4,gens=stu",
        "sl:m=5,ring=f2t:4,gens=stt'uu'",
        "sl:m=3,ring=f2t:3,gens=stt'",
        "esl:m=8,ring=zmod2,gens=hadad",
        "limit:sym",
        "limit:gl-shift,ring=int,gens=stu",
        "limit:gl-shift,ring=f2t,gens=stt'",
        "limit:ut-shift,ring=zmod3",
    ] {
        let g = group(text);
        let k = g.arity();
        assert_eq!(g.evaluate(&Word::identity(k)).unwrap(), *g.identity());
        for _ in 0..200 {
            let (a, b) = (random_word(&mut rng, k, 6), random_word(&mut rng, k, 6));
            let ab = g.evaluate(&a.concat(&b).unwrap()).unwrap();
            let prod = g.mul(&g.evaluate(&a).unwrap(), &g.evaluate(&b).unwrap()).unwrap();
            assert_eq!(ab.key(), prod.key(), "{text}: {a} * {b}");
            if let (Some(sa), Some(sb)) = (g.evaluate(&a).unwrap().shift(), g.evaluate(&b).unwrap().shift()) {
                assert_eq!(ab.shift(), Some(sa + sb));
            }
        }
    }
}

#[test]
fn group_examples() {
    let s5 = group("sym:m=5");
    assert_eq!(s5.order_hint(), Some(120));
    assert!(s5.evaluate(&Word::parse(2, "s1.s1.s1.s1.s1").unwrap()).unwrap().is_identity());
    assert_eq!(order_of_generator(&s5, 1, 10).unwrap(), GeneratorOrder::Exact(5));
    assert_eq!(order_of_generator(&s5, 2, 10).unwrap(), GeneratorOrder::Exact(2));
    assert_eq!(group("sl:m=3,ring=zmod2,gens=st").order_hint(), Some(168));
    assert!(group("sl:m=3,ring=zmod2,gens=st")
        .evaluate(&Word::parse(2, "s2.s2").unwrap())
        .unwrap()
        .is_identity());
    assert_eq!(
        order_of_generator(&group("sl:m=3,ring=zmod6,gens=stu"), 3, 100).unwrap(),
        GeneratorOrder::Exact(6)
    );
    assert_eq!(order_of_generator(&group("sym:m=7"), 2, 10).unwrap(), GeneratorOrder::Exact(2));
    assert_eq!(order_of_generator(&group("limit:sym"), 1, 50).unwrap(), GeneratorOrder::AtLeast(50));
    assert!(matches!(
        "sl:m=4,ring=zmod2,gens=st".parse::<GroupSpec>().and_then(|s| MarkedGroup::new(s)),
        Err(Error::UnsupportedParameter(_))
    ));
    assert!(matches!("sl:m=3,ring=zmod2,gens=xy".parse::<GroupSpec>(), Err(Error::Parse { .. })));
}

#[test]
fn element_keys() {
    let id3 = group("sym:m=3").identity().key();
    assert_eq!(id3, [b'P', 0, 0, 1, 0, 2, 0]);
    for p in [5u64, 7, 13] {
        for e in [[1, 2, 3, 4], [0, 1, p - 1, 0], [2, 0, 0, (p + 1) / 2]] {
            let neg = e.map(|v| (p - v % p) % p);
            let a = Element::ProjMatrix { p, entries: canonical_projective(p, e) };
            let b = Element::ProjMatrix { p, entries: canonical_projective(p, neg) };
            assert_eq!(a.key(), b.key());
        }
    }
    let trimmed = ShiftMatrix::elementary(Ring::ArbInt, 0, 2, BigInt::from(4));
    let mut padded = trimmed.clone();
    padded.lo -= 1;
    padded.size += 2;
    let n = padded.size;
    padded.block = vec![BigInt::from(0); n * n];
    for d in 0..n {
        padded.block[d * n + d] = BigInt::from(1);
    }
    for i in 0..trimmed.size {
        for j in 0..trimmed.size {
            padded.block[(i + 1) * n + j + 1] = trimmed.block[i * trimmed.size + j].clone();
        }
    }
    assert_ne!(Element::ShiftMatrix(padded.clone()).key(), Element::ShiftMatrix(trimmed.clone()).key());
    padded.trim();
    assert_eq!(Element::ShiftMatrix(padded).key(), Element::ShiftMatrix(trimmed).key());
}

#[test]
fn keys_are_injective_on_small_groups() {
    for text in ["sym:m=4", "psl2:p=5", "sl:m=3,ring=zmod2,gens=st"] {
        let g = group(text);
        let graph = boxspace::graph::CayleyGraph::build(&g, 10_000).unwrap();
        let elements: std::collections::HashSet<Element> = (0..graph.len()).map(|v| graph.element(v).clone()).collect();
        let keys: std::collections::HashSet<Vec<u8>> = elements.iter().map(Element::key).collect();
        assert_eq!(elements.len(), graph.len());
        assert_eq!(keys.len(), graph.len(), "{text}");
    }
}

#[test]
fn hadad_generator_counts() {
    for (ring, count) in [(Ring::ZMod(2), 72), (Ring::ZMod(3), 72), (Ring::TruncPoly2(2), 96)] {
        let gens = hadad_generators(2, ring).unwrap();
        assert_eq!(gens.len(), count, "{ring}");
        for g in &gens {
            let Element::Matrix(m) = g else { panic!() };
            assert_eq!(m.n, 8);
            assert_eq!(m.det(), 1);
        }
    }
}

#[test]
fn hadad_products_stay_in_sl() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let g = group("esl:m=8,ring=zmod3,gens=hadad");
    let k = g.arity();
    for _ in 0..50 {
        let w = random_word(&mut rng, k, 30);
        let Element::Matrix(m) = g.evaluate(&w).unwrap() else { panic!() };
        assert_eq!(m.det(), 1);
        assert!(m.inverse().is_some());
    }
}

#[test]
fn contractivity_on_finite_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for text in ["sym:m=5", "psl2:p=7", "sl:m=3,ring=zmod3,gens=stu"] {
        let g = group(text);
        let graph = boxspace::graph::CayleyGraph::build(&g, 100_000).unwrap();
        for _ in 0..300 {
            let (a, b) = (random_word(&mut rng, g.arity(), 12), random_word(&mut rng, g.arity(), 12));
            let (ea, eb) = (g.evaluate(&a).unwrap(), g.evaluate(&b).unwrap());
            let (va, vb) = (graph.vertex_of(&ea).unwrap(), graph.vertex_of(&eb).unwrap());
            let d = graph.bfs_from(va)[vb] as usize;
            let free = a.concat(&b.invert()).unwrap().len();
            assert!(d <= free, "{text}: d={d} > {free}");
            let w = random_word(&mut rng, g.arity(), 15);
            assert!(graph.word_length(&g.evaluate(&w).unwrap()).unwrap() <= w.len());
        }
    }
}
