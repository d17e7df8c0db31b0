//! Spread a spiky vector over c scaled copies: the l2 norm is unchanged, the
//! l_inf norm drops by sqrt(c), and the hashed self-norm gets a predictable
//! variance.
//!
//! cargo run --example replication

use fhash::hashcore::{replicate, replicated_self_variance, variance_closed_form, ReplicationParams, SparseVector};

pub fn main() {
    let x = SparseVector::from_pairs([("spike", 3.0), ("a", 1.0), ("b", 1.0)]).unwrap();
    let x = x.scaled(1.0 / x.l2());
    let m = 256;
    let sigma2 = variance_closed_form(&x, &x, m).unwrap();
    println!("c    nnz  l2      l_inf   Var |x'|^2_phi (direct)  (from x)");
    for c in [1, 2, 4, 16, 64] {
        let xr = replicate(&x, ReplicationParams::new(c).unwrap());
        println!(
            "{c:<4} {:<4} {:.4}  {:.4}  {:.3e}                {:.3e}",
            xr.len(),
            xr.l2(),
            xr.linf(),
            variance_closed_form(&xr, &xr, m).unwrap(),
            replicated_self_variance(sigma2, x.l2(), c, m)
        );
    }
}
