use super::{fractional_knapsack_value, OrderPolicy, PriceMenu};
use crate::dist::{AgentPrior, PriceLottery};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng;
use crate::value::ValueFunction;

fn randomized<T: Real>(priors: &[AgentPrior<T>], q: &[T]) -> Vec<usize> {
    (0..q.len())
        .filter(|&i| priors[i].ironed().interval_containing(q[i]).is_some())
        .collect()
}

/// Repeatedly takes the two lowest-index agents sitting strictly inside
/// ironed intervals and moves spend from the one with the higher ironed
/// virtual cost per unit value to the other, until one of them reaches an
/// interval endpoint. `P̄` is linear on an ironed interval, so total spend
/// is unchanged. At most one randomized agent remains.
pub fn pairwise_shift<T: Real>(priors: &[AgentPrior<T>], values: &[T], q: &[T]) -> Vec<T> {
    let mut q = q.to_vec();
    for _ in 0..=q.len() {
        let r = randomized(priors, &q);
        if r.len() < 2 {
            break;
        }
        let (i, j) = (r[0], r[1]);
        let ratio = |a: usize| {
            let s = priors[a].ironed().ironed_virtual_cost(q[a]);
            if values[a] > T::zero() {
                s / values[a]
            } else {
                T::infinity()
            }
        };
        let (good, bad) = if ratio(i) <= ratio(j) { (i, j) } else { (j, i) };
        let (_, gb) = priors[good]
            .ironed()
            .interval_containing(q[good])
            .expect("randomized");
        let (ba, _) = priors[bad]
            .ironed()
            .interval_containing(q[bad])
            .expect("randomized");
        let sg = priors[good].ironed().ironed_virtual_cost(q[good]);
        let sb = priors[bad].ironed().ironed_virtual_cost(q[bad]);
        let up = (gb - q[good]) * sg;
        let down = (q[bad] - ba) * sb;
        if up <= down {
            q[good] = gb;
            if sb > T::zero() {
                q[bad] = (q[bad] - up / sb).max(ba);
            }
        } else {
            q[bad] = ba;
            q[good] = (q[good] + down / sg).min(gb);
        }
    }
    q
}

/// Deterministic sequential menu from a randomized additive one.
///
/// After [`pairwise_shift`], the last randomized agent is priced at
/// whichever end of its ironed interval gives the larger expected
/// fractional-knapsack value, estimated on `samples` common cost draws.
pub fn derandomize_additive<T: Real>(
    menu: &PriceMenu<T>,
    priors: &[AgentPrior<T>],
    value: &ValueFunction<T>,
    budget: T,
    samples: usize,
    seed: u64,
) -> Result<PriceMenu<T>> {
    let values = value.additive_values().ok_or(Error::WrongVariant {
        expected: "additive",
    })?;
    if priors.len() != menu.n() || values.len() != menu.n() {
        return Err(Error::Dimension(
            "menu, priors and values differ in length".into(),
        ));
    }
    let q0: Vec<T> = menu.offers.iter().map(|o| o.quantile).collect();
    let q = pairwise_shift(priors, values, &q0);

    let offer = |i: usize, qi: T| {
        if qi <= T::zero() {
            PriceLottery::deterministic(T::zero(), T::zero())
        } else {
            PriceLottery::deterministic(priors[i].dist().inverse_cdf(qi), qi)
        }
    };
    let mut offers: Vec<PriceLottery<T>> =
        q.iter().enumerate().map(|(i, &qi)| offer(i, qi)).collect();

    if let Some(&r) = randomized(priors, &q).first() {
        if samples == 0 {
            return Err(Error::ZeroSamples);
        }
        let (a, b) = priors[r]
            .ironed()
            .interval_containing(q[r])
            .expect("randomized");
        let options = [offer(r, a), offer(r, b)];
        let mut prices: Vec<T> = offers.iter().map(|o| o.price_lo).collect();
        let mut totals = [T::zero(); 2];
        let mut rng = rng::stream(seed, 0);
        let mut set = Vec::with_capacity(q.len());
        for _ in 0..samples {
            let costs: Vec<T> = priors.iter().map(|p| p.dist().sample(&mut rng)).collect();
            for (t, opt) in totals.iter_mut().zip(&options) {
                prices[r] = opt.price_lo;
                set.clear();
                set.extend((0..q.len()).filter(|&i| {
                    let o = if i == r { opt } else { &offers[i] };
                    !o.is_void() && costs[i] <= prices[i]
                }));
                *t = *t + fractional_knapsack_value(values, &prices, budget, &set);
            }
        }
        offers[r] = if totals[1] > totals[0] {
            options[1]
        } else {
            options[0]
        };
    }
    PriceMenu::new(offers, OrderPolicy::BangPerBuck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::CostDistribution;
    use crate::exante::{expected_spend, solve_additive};

    fn bimodal(shift: f64) -> AgentPrior<f64> {
        let d = CostDistribution::piecewise_cdf(vec![
            (0.0, 0.0),
            (0.2 + shift, 0.45),
            (0.8, 0.55),
            (1.0, 1.0),
        ])
        .unwrap();
        AgentPrior::new(d, 2001).unwrap()
    }

    #[test]
    fn deterministic_menu_unchanged() {
        let priors =
            AgentPrior::with_default_grid(CostDistribution::<f64>::uniform(0.0, 1.0).unwrap())
                .unwrap()
                .replicate(3);
        let v = ValueFunction::additive(vec![1.0, 2.0, 3.0]).unwrap();
        let sol = solve_additive(&priors, &[1.0, 2.0, 3.0], 0.6).unwrap();
        let menu = PriceMenu::from_solution(&sol, OrderPolicy::BangPerBuck).unwrap();
        let out = derandomize_additive(&menu, &priors, &v, 0.6, 10, 1).unwrap();
        for (a, b) in out.offers.iter().zip(&menu.offers) {
            assert!((a.price_lo - b.price_lo).abs() < 1e-12);
            assert_eq!(a.quantile, b.quantile);
        }
    }

    #[test]
    fn two_randomized_agents_keep_spend() {
        let priors = vec![bimodal(0.0), bimodal(0.05)];
        let values = [1.0, 1.2];
        let q0 = [0.5, 0.5];
        assert_eq!(randomized(&priors, &q0).len(), 2);
        let q = pairwise_shift(&priors, &values, &q0);
        assert!(randomized(&priors, &q).len() <= 1);
        // independent spend recomputation from the hull vertices
        let spend = |q: &[f64]| expected_spend(&priors, q);
        assert!((spend(&q) - spend(&q0)).abs() < 1e-9);
        let obj = |q: &[f64]| q[0] * values[0] + q[1] * values[1];
        assert!(obj(&q) >= obj(&q0) - 1e-12);

        let v = ValueFunction::additive(values.to_vec()).unwrap();
        let offers = q0.iter().zip(&priors).map(|(&x, p)| p.offer(x)).collect();
        let menu = PriceMenu::new(offers, OrderPolicy::BangPerBuck).unwrap();
        let out = derandomize_additive(&menu, &priors, &v, 1.0, 2000, 7).unwrap();
        assert!(out.is_deterministic());
    }

    #[test]
    fn dominant_price_chosen() {
        // with a budget that always fits, the higher price buys strictly more
        let priors = vec![bimodal(0.0)];
        let v = ValueFunction::additive(vec![1.0]).unwrap();
        let menu = PriceMenu::new(vec![priors[0].offer(0.5)], OrderPolicy::BangPerBuck).unwrap();
        assert!(!menu.is_deterministic());
        let out = derandomize_additive(&menu, &priors, &v, 10.0, 500, 3).unwrap();
        let (_, b) = priors[0].ironed().interval_containing(0.5).unwrap();
        assert_eq!(out.offers[0].quantile, b);
    }

    #[test]
    fn rejects_non_additive() {
        let priors = vec![bimodal(0.0)];
        let v = ValueFunction::symmetric(vec![0.0, 1.0]).unwrap();
        let menu = PriceMenu::new(vec![priors[0].offer(0.5)], OrderPolicy::BangPerBuck).unwrap();
        assert!(derandomize_additive(&menu, &priors, &v, 1.0, 10, 0).is_err());
    }
}
