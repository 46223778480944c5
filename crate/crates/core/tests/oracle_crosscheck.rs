use nalgebra::DMatrix;

use gicreg::oracle::{autocovariance, Term, ToeplitzOracle};
use gicreg::spectra::make_arma;
use gicreg::ChannelParams;

/// Impulse response of `B(z)/A(z)` with `A = 1 − Σρ z^l`, `B = 1 − Σκ z^l`.
fn impulse(ar: &[f64], ma: &[f64], len: usize) -> Vec<f64> {
    let mut psi = vec![0.0; len];
    for i in 0..len {
        let mut v = match i {
            0 => 1.0,
            _ if i <= ma.len() => -ma[i - 1],
            _ => 0.0,
        };
        for (l, r) in ar.iter().enumerate() {
            if i > l {
                v += r * psi[i - l - 1];
            }
        }
        psi[i] = v;
    }
    psi
}

fn autocov_by_impulse(ar: &[f64], ma: &[f64], power: f64, lags: usize) -> Vec<f64> {
    let psi = impulse(ar, ma, 4000);
    let var: f64 = psi.iter().map(|x| x * x).sum();
    (0..lags).map(|k| power * psi.iter().zip(&psi[k..]).map(|(a, b)| a * b).sum::<f64>() / var).collect()
}

fn logdet2(m: DMatrix<f64>) -> f64 {
    let l = m.cholesky().expect("positive definite").l();
    2.0 * l.diagonal().iter().map(|d| d.log2()).sum::<f64>()
}

fn toeplitz(c1: f64, r1: &[f64], c2: f64, r2: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let k = i.abs_diff(j);
        f64::from(u8::from(i == j)) + c1 * r1[k] + c2 * r2[k]
    })
}

#[test]
fn autocovariance_matches_impulse_sums() {
    for (ar, ma) in
        [(vec![0.8], vec![0.3]), (vec![0.5, -0.3], vec![]), (vec![], vec![0.9, 0.4]), (vec![-0.6], vec![-0.5, 0.2])]
    {
        let s = make_arma(&ar, &ma, 2.5).unwrap();
        let got = autocovariance(&s, 40).unwrap();
        let want = autocov_by_impulse(&ar, &ma, 2.5, 40);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "{ar:?}/{ma:?}: {g} vs {w}");
        }
    }
}

#[test]
fn finite_rates_match_dense_cholesky() {
    let ch = ChannelParams::new(3.0, 2.0, 0.7, 1.4).unwrap();
    let (ar1, ma1, ar2, ma2) = (vec![0.7], vec![0.2], vec![-0.4, 0.2], vec![0.5]);
    let o = ToeplitzOracle::new(&ch, make_arma(&ar1, &ma1, 3.0).unwrap(), make_arma(&ar2, &ma2, 2.0).unwrap()).unwrap();
    let r1 = autocov_by_impulse(&ar1, &ma1, 3.0, 200);
    let r2 = autocov_by_impulse(&ar2, &ma2, 2.0, 200);
    for n in [1, 5, 64, 200] {
        let nf = n as f64;
        let ld = |c1, c2| logdet2(toeplitz(c1, &r1, c2, &r2, n)) / (2.0 * nf);
        let want = [
            (Term::Cond, ld(1.0, 0.0)),
            (Term::Interference, ld(1.0, 0.7) - ld(1.0, 0.0)),
            (Term::Direct, ld(1.4, 1.0) - ld(1.4, 0.0)),
        ];
        for (t, w) in want {
            let got = o.finite_n_rate(t, n).unwrap();
            assert!((got - w).abs() < 1e-9, "{t:?} n={n}: {got} vs {w}");
        }
    }
}
