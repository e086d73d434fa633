//! The entropic update next to the exponentially tilted sample frequencies,
//! for increasing amounts of data with the same frequencies.
//!
//! `cargo run --example method_of_types`

use meupdate::comparator::compare;
use meupdate::model::Problem;

fn main() -> meupdate::Result<()> {
    let p = Problem::flat(vec![1.0, 2.0, 3.0], vec![11, 2, 7], 2.3)?;
    let c = compare(&p)?;
    println!("frequencies   {:.4?}", c.tilted.frequencies);
    println!(
        "tilted        {:.4?}  (eta = {:.6})",
        c.tilted.probabilities, c.eta
    );
    println!("updated means {:.4?}  (beta = {:.4})", c.me_means, c.beta);
    println!("L1 = {:.4e}, Linf = {:.4e}", c.l1, c.linf);
    for note in &c.annotations {
        println!("note: {note}");
    }

    println!("\nscale  beta        Linf");
    for s in [1u64, 5, 25, 125] {
        let q = Problem::flat(vec![1.0, 2.0, 3.0], vec![11 * s, 2 * s, 7 * s], 2.3)?;
        let c = compare(&q)?;
        println!("{s:>5}  {:<10.4}  {:.4e}", c.beta, c.linf);
    }
    Ok(())
}
