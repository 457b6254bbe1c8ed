//! Naive pulse stretching breaks down when the cross-resonance rate is
//! nonlinear in drive amplitude; recalibrating the amplitude fixes it.

use zne_lab::cr::{simulate_cr_decay, CRParams, DriveMode, ScalingPolicy, ZxCurve};
use zne_lab::StretchSet;

fn main() -> zne_lab::Result<()> {
    let stretch = StretchSet::new(vec![1.0, 2.0])?;
    let params = CRParams::default();
    for (t_gate, scaling) in [
        (2.0, ScalingPolicy::Naive),
        (6.0, ScalingPolicy::Naive),
        (2.0, ScalingPolicy::Recalibrated),
    ] {
        let d = simulate_cr_decay(t_gate, &stretch, &params, 100.0, DriveMode::FullNonlinear, scaling, ZxCurve::quoted())?;
        println!(
            "t_gate {t_gate} {scaling:?}: mitigated range [{:.3}, {:.3}], mean |dev| raw {:.4} mitigated {:.4}",
            d.min_mitigated(),
            d.max_mitigated(),
            d.mean_deviation(&d.series[0]),
            d.mean_deviation(&d.mitigated)
        );
    }
    Ok(())
}
