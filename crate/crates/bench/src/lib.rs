//! Workload generators shared by the benchmarks.

use miniform_core::term::normalize;
use miniform_core::{Argument, Coefficient, FunctionApp, FunctionId, SymbolId, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reproducible stream of `len` random terms over `symbols` symbols and
/// two functions. Roughly one term in `symbols` repeats an earlier shape, so
/// sorting exercises merging as well as ordering.
pub fn term_stream(seed: u64, len: usize, symbols: u32) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let coeff = Coefficient::from(rng.gen_range(-9i64..10));
        let symbols = (0..rng.gen_range(1..4))
            .map(|_| (SymbolId(rng.gen_range(0..symbols)), rng.gen_range(1..4)))
            .collect();
        let functions = (0..rng.gen_range(0..2))
            .map(|_| FunctionApp {
                id: FunctionId(rng.gen_range(0..2)),
                args: vec![Argument::Int(rng.gen_range(0i64..8).into())],
            })
            .collect();
        if let Ok(Some(t)) = normalize(Term {
            coeff,
            symbols,
            functions,
        }) {
            out.push(t);
        }
    }
    out
}

/// Source of the multi-angle reduction for `sin(n,x)`.
pub fn multi_angle_program(n: u32) -> String {
    format!(
        "nwrite statistics;\nSymbols x, k, [sin(x)], [cos(x)];\nFunction sin, cos;\nLocal expr = sin({n},x);\nrepeat;\n  id sin(0,x) = 0;\n  id sin(1,x) = sin(x);\n  id sin(k?,x) = 2*sin(k-1,x)*cos(x) - sin(k-2,x);\nendrepeat;\nid sin(x) = [sin(x)];\nid cos(x) = [cos(x)];\nprint;\n.end\n"
    )
}

/// Source of the Tribonacci program with `n` terms.
pub fn tribonacci_program(n: u32) -> String {
    format!(
        "nwrite statistics;\n#define N \"{n}\"\nLocal T1 = 1;\nLocal T2 = 1;\nLocal T3 = 2;\n#do i = 4, 'N'\n.sort\ndrop T{{'i'-3}};\nskip T{{'i'-2}};\nskip T{{'i'-1}};\nLocal T'i' = T{{'i'-1}} + T{{'i'-2}} + T{{'i'-3}};\nprint;\n#enddo\n.end\n"
    )
}
