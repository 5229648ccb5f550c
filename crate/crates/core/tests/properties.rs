use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use miniform_core::codec::{decode_term, encode_term};
use miniform_core::frontend::{expand, parse_expr, tokenize, Expr};
use miniform_core::rewrite::{
    apply_id, apply_repeat, apply_repeat_with, compile_pattern, evaluate, instantiate_pattern, match_term, Executable,
    Identify, RepeatBlock, Scope, Site,
};
use miniform_core::term::{compare, normalize};
use miniform_core::{
    sort_merge, spill_sort, Argument, Coefficient, Declarations, FunctionApp, FunctionId, Location, Settings, SymbolId,
    Term,
};

fn coeff_strategy() -> impl Strategy<Value = Coefficient> {
    (-50i64..50, 1i64..12).prop_map(|(n, d)| Coefficient::new(n.into(), d.into()).unwrap())
}

fn arg_strategy() -> impl Strategy<Value = Argument> {
    prop_oneof![
        (-3i64..12).prop_map(|n| Argument::Int(n.into())),
        (0u32..3).prop_map(|s| Argument::Symbol(SymbolId(s))),
    ]
}

fn raw_term_strategy() -> impl Strategy<Value = Term> {
    (
        coeff_strategy(),
        prop::collection::vec((0u32..4, -2i32..4), 0..4),
        prop::collection::vec((0u32..2, prop::collection::vec(arg_strategy(), 0..3)), 0..3),
    )
        .prop_map(|(coeff, syms, fns)| Term {
            coeff,
            symbols: syms.into_iter().map(|(s, e)| (SymbolId(s), e)).collect(),
            functions: fns
                .into_iter()
                .map(|(f, args)| FunctionApp {
                    id: FunctionId(f),
                    args,
                })
                .collect(),
        })
}

fn term_strategy() -> impl Strategy<Value = Term> {
    raw_term_strategy().prop_filter_map("zero term", |t| normalize(t).unwrap())
}

fn stream_strategy() -> impl Strategy<Value = Vec<Term>> {
    prop::collection::vec(term_strategy(), 0..40)
}

fn decls() -> Declarations {
    let mut d = Declarations::new();
    for s in ["x", "y", "z", "k", "[sin(x)]", "[cos(x)]"] {
        d.declare_symbol(s).unwrap();
    }
    d.declare_function("sin").unwrap();
    d.declare_function("cos").unwrap();
    d
}

fn at() -> Location {
    Location::new("prop.frm", 1)
}

fn expr(src: &str) -> Expr {
    parse_expr(&tokenize(src).unwrap()).unwrap()
}

fn eval(d: &Declarations, src: &str) -> Vec<Term> {
    let loc = at();
    let scope = Scope {
        decls: d,
        exprs: &(),
        wildcards: &[],
        at: &loc,
    };
    evaluate(&expr(src), &scope).unwrap()
}

fn to_ratio(c: &Coefficient) -> BigRational {
    BigRational::new(c.numer().clone(), c.denom().clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn compare_is_a_total_order(a in term_strategy(), b in term_strategy(), c in term_strategy()) {
        prop_assert_eq!(compare(&a, &a), Ordering::Equal);
        prop_assert_eq!(compare(&a, &b), compare(&b, &a).reverse());
        if compare(&a, &b) != Ordering::Greater && compare(&b, &c) != Ordering::Greater {
            prop_assert_ne!(compare(&a, &c), Ordering::Greater);
        }
    }

    #[test]
    fn sort_merge_idempotent(s in stream_strategy()) {
        let once = sort_merge(s);
        prop_assert_eq!(sort_merge(once.clone()), once);
    }

    #[test]
    fn sort_merge_permutation_invariant(s in stream_strategy(), seed in any::<u64>()) {
        let mut shuffled = s.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(sort_merge(s), sort_merge(shuffled));
    }

    #[test]
    fn sort_merge_output_is_strictly_ordered(s in stream_strategy()) {
        let out = sort_merge(s);
        for w in out.windows(2) {
            prop_assert_eq!(compare(&w[0], &w[1]), Ordering::Less);
        }
        prop_assert!(out.iter().all(|t| !t.coeff.is_zero()));
    }

    #[test]
    fn sort_merge_is_linear(a in stream_strategy(), b in stream_strategy()) {
        let joined: Vec<Term> = a.iter().chain(&b).cloned().collect();
        let staged: Vec<Term> = sort_merge(a).into_iter().chain(sort_merge(b)).collect();
        prop_assert_eq!(sort_merge(joined), sort_merge(staged));
    }

    #[test]
    fn spill_matches_in_memory(s in stream_strategy(), small in 64usize..512) {
        let dir = tempfile::tempdir().unwrap();
        let settings = Settings { temp_dir: dir.path().to_path_buf(), small_size: small, ..Settings::default() };
        let (spilled, _) = spill_sort(s.clone(), &settings).unwrap();
        prop_assert_eq!(spilled, sort_merge(s));
        prop_assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn codec_round_trip(t in term_strategy()) {
        let mut buf = Vec::new();
        encode_term(&t, &mut buf);
        prop_assert_eq!(decode_term(&buf).unwrap(), t);
    }

    #[test]
    fn normalize_is_idempotent(t in raw_term_strategy()) {
        if let Some(n) = normalize(t).unwrap() {
            prop_assert_eq!(normalize(n.clone()).unwrap(), Some(n));
        }
    }

    #[test]
    fn wildcard_match_is_sound(t in term_strategy()) {
        let d = decls();
        let p = compile_pattern(&expr("sin(k?,x)"), &d, &at()).unwrap();
        if let Some(m) = match_term(&p, &t) {
            let Site::Function(i) = m.site else { panic!("function pattern matched a symbol") };
            prop_assert_eq!(instantiate_pattern(&p, &m.binding), Term::function(t.functions[i].clone()));
        }
    }

    #[test]
    fn apply_id_identity_on_non_match(t in term_strategy()) {
        let d = decls();
        // cos is FunctionId(1); the generated terms use sin and cos, so pick a
        // pattern that can only match an arity-5 application
        let rule = Identify::compile(&expr("cos(k?,x,x,x,x)"), &expr("y"), &d, &(), &at()).unwrap();
        let out = apply_id(&rule, &t).unwrap();
        prop_assert!(!out.matched);
        prop_assert_eq!(out.terms, vec![t]);
    }

    #[test]
    fn keywords_are_case_insensitive(mask in prop::collection::vec(any::<bool>(), 32)) {
        let base = "symbols x;\nlocal e = (x+1)^2;\nprint;\n.end\n";
        let mut mixed = String::new();
        let mut i = 0;
        for (n, line) in base.lines().enumerate() {
            let word_end = line.find([' ', ';']).unwrap_or(line.len());
            for (j, ch) in line.chars().enumerate() {
                let flip = n < 3 && j < word_end && mask[i % mask.len()];
                i += 1;
                mixed.push(if flip { ch.to_ascii_uppercase() } else { ch });
            }
            mixed.push('\n');
        }
        let s = Settings::default();
        let a = expand("a", None, base, &s).unwrap().tokens;
        let b = expand("b", None, &mixed, &s).unwrap().tokens;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn comment_lines_do_not_change_tokens(positions in prop::collection::vec(0usize..6, 0..5)) {
        let lines = ["Symbols x;", "Local e = x + 1;", "id x = 2;", "print;", ".end"];
        let base = lines.join("\n") + "\n";
        let mut with_comments: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
        for p in positions {
            with_comments.insert(p.min(with_comments.len() - 1), "* a comment; with .sort inside".to_string());
        }
        let s = Settings::default();
        let a = expand("a", None, &base, &s).unwrap().tokens;
        let b = expand("b", None, &(with_comments.join("\n") + "\n"), &s).unwrap().tokens;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn do_loop_unrolls(lo in -3i64..5, len in 0i64..6) {
        let hi = lo + len - 1;
        let looped = format!("#do i = {lo}, {hi}\nLocal E{{'i'+10}} = 'i';\n#enddo\n");
        let mut unrolled = String::new();
        for i in lo..=hi {
            unrolled.push_str(&format!("Local E{} = {i};\n", i + 10));
        }
        let s = Settings::default();
        let a = expand("a", None, &looped, &s).unwrap().tokens;
        let b = expand("b", None, &unrolled, &s).unwrap().tokens;
        prop_assert_eq!(a, b);
    }
}

/// Exact rational arithmetic checked against `num_rational` over 10^4 random operations.
#[test]
fn coefficient_arithmetic_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ours = Coefficient::from(1);
    let mut reference = BigRational::from_integer(1.into());
    for _ in 0..10_000 {
        let n: i64 = rand::Rng::gen_range(&mut rng, -1000..1000);
        let d: i64 = rand::Rng::gen_range(&mut rng, 1..1000);
        let c = Coefficient::new(n.into(), d.into()).unwrap();
        let r = BigRational::new(n.into(), d.into());
        assert_eq!(to_ratio(&c), r);
        match rand::Rng::gen_range(&mut rng, 0..3) {
            0 => {
                ours = &ours + &c;
                reference += &r;
            }
            1 => {
                ours = &ours * &c;
                reference *= &r;
            }
            _ => {
                if n != 0 {
                    ours = &ours * &c.recip().unwrap();
                    reference /= &r;
                }
            }
        }
        // keep magnitudes bounded so the run stays quick
        if ours.numer().bits() > 256 || ours.denom().bits() > 256 {
            ours = Coefficient::from(1);
            reference = BigRational::from_integer(1.into());
        }
        assert_eq!(to_ratio(&ours), reference);
    }
}

#[test]
fn binomial_expansion_matches_oracle() {
    let d = decls();
    for n in 0..=12u32 {
        let got = eval(&d, &format!("(x+y)^{n}"));
        assert_eq!(got.len(), n as usize + 1);
        for t in &got {
            let kx = t.symbols.iter().find(|s| s.0 == SymbolId(0)).map_or(0, |s| s.1) as u32;
            let mut binom = BigInt::from(1);
            for i in 0..kx {
                binom = binom * (n - i) / (i + 1);
            }
            assert_eq!(t.coeff, Coefficient::from(binom), "n={n} term {t:?}");
        }
    }
}

fn example2_rules(d: &Declarations) -> RepeatBlock {
    let id = |l: &str, r: &str| Executable::Id(Identify::compile(&expr(l), &expr(r), d, &(), &at()).unwrap());
    RepeatBlock::new(
        vec![
            id("sin(0,x)", "0"),
            id("sin(1,x)", "sin(x)"),
            id("sin(k?,x)", "2*sin(k-1,x)*cos(x) - sin(k-2,x)"),
        ],
        (11, 17),
    )
}

#[test]
fn repeat_is_confluent_under_reordering() {
    let d = decls();
    let block = example2_rules(&d);
    for n in [3, 7, 12] {
        let start = &eval(&d, &format!("sin({n},x)"))[0];
        let reference = sort_merge(apply_repeat(&block, start).unwrap());
        for seed in 0..8u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = apply_repeat_with(&block, start, &mut |pending| pending.shuffle(&mut rng)).unwrap();
            assert_eq!(sort_merge(out), reference, "n={n} seed={seed}");
        }
    }
}

#[test]
fn divergent_repeat_is_detected() {
    let d = decls();
    let rule = Identify::compile(&expr("x"), &expr("x+1"), &d, &(), &at()).unwrap();
    let mut block = RepeatBlock::new(vec![Executable::Id(rule)], (1, 3));
    block.cap = 50;
    let start = &eval(&d, "x")[0];
    assert!(matches!(
        apply_repeat(&block, start),
        Err(miniform_core::EngineError::RepeatCapExceeded { cap: 50, .. })
    ));
}
