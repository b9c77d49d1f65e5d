//! Exponential mixing of the cat map, measured on six smooth observables,
//! against an irrational rotation that does not mix.

use bclab::dynamics::{ed_sum, ed_sum_limit, fit_mixing, spectral_correlations, MapSystem, SpectralObservable};

fn main() -> bclab::Result<()> {
    let cat = MapSystem::cat();
    let family = SpectralObservable::standard_family(2);
    let times: Vec<u64> = (0..=20).collect();

    let table = spectral_correlations(&cat, &family, 1, &times)?;
    let cert = fit_mixing(&cat, &table)?;
    println!("cat map: {}", cert.to_string().replace('\n', " "));
    for (t, env) in table.times().iter().zip(table.envelope()) {
        let g = cat.norm(*t, 0);
        println!("  t={t:>2} |g|={g:>6.3} envelope={env:.3e} bound={:.3e}", cert.bound(g));
    }

    let ed = ed_sum(&cat, 1.0, 10_000)?;
    println!("ed_sum(lambda=1) = {ed:.12} (limit {:.12})", ed_sum_limit(&cat, 1.0));

    let rotation = MapSystem::rotation(&[2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0], std::f64::consts::E)?;
    let table = spectral_correlations(&rotation, &family, 1, &times)?;
    match fit_mixing(&rotation, &table) {
        Ok(c) => println!("rotation unexpectedly certified: {c:?}"),
        Err(e) => println!("rotation: {e}"),
    }
    Ok(())
}
