// Compare the two filtration orientations on all maps.
use knot_lattice::lattice::{Generator, Lattice, ShiftSite};
use knot_lattice::maps::BlowupContext;
use knot_lattice::plumbing::Rational;
use knot_lattice::verify::{random_forest, RandomForestSpec, V0Attachment};

fn alpha_t(lat: &Lattice, gen: &Generator, t: i64) -> Rational {
    // t = +1: paper formula as printed; t = −1: v0 reversed.
    let g = lat.g_val(&gen.k, gen.e);
    let shifted = lat.shift(&gen.k, ShiftSite::V0, t);
    let gs = lat.g_val(&shifted, gen.e);
    let mut lk = Rational::from(0);
    for (p, a) in lat.sigma().coeffs.iter().enumerate() {
        lk += *a * Rational::from(gen.k.0[p]);
    }
    let sign = Rational::from(t);
    Rational::from(-(gen.j as i64))
        + (Rational::from(2 * (g - gs)) + sign * lk + lat.sigma().pairing_with_v0) / 2
}

fn main() {
    let mut viol = [[0u64; 6]; 2]; // [orientation][check]
    let labels = ["d-filtered", "H0-filtered", "P/S-filtered", "R/T-filtered", "pre-stab-eq", "C-filtered"];
    for seed in 0..60u64 {
        let spec = RandomForestSpec { seed, max_framed: 3, framing_range: (-5, -1), v0_attachment: V0Attachment::Leaf };
        let Ok(base) = random_forest(&spec) else { continue };
        if base.framed_count() == 0 { continue; }
        // vertex ctx at first framed vertex; edge ctx at first framed-framed edge
        let mut ctxs = vec![];
        let vname = base.name(base.framed_vertices()[0]).to_owned();
        ctxs.push(BlowupContext::vertex(&base, &vname).unwrap());
        if let Some(&(a, b)) = base.edges().iter().find(|&&(a, b)| base.framing(a).is_some() && base.framing(b).is_some()) {
            if let Ok(c) = BlowupContext::edge(&base, base.name(a), base.name(b)) { ctxs.push(c); }
        }
        for ctx in &ctxs {
            for (oi, t) in [(0usize, 1i64), (1, -1)] {
                for y in ctx.blown().enumerate_generators(1) {
                    let ay = alpha_t(ctx.blown(), &y, t);
                    for tm in ctx.blown().boundary(&y).iter() {
                        if alpha_t(ctx.blown(), tm, t) > ay { viol[oi][0] += 1; }
                    }
                    for tm in ctx.h0(&y).iter() {
                        if alpha_t(ctx.blown(), tm, t) > ay { viol[oi][1] += 1; }
                    }
                    let down = match ctx.kind() {
                        knot_lattice::maps::CtxKind::Vertex => ctx.p_map(&y),
                        knot_lattice::maps::CtxKind::Edge => ctx.s_map(&y),
                    };
                    for tm in down.iter() {
                        if alpha_t(ctx.base(), tm, t) > ay { viol[oi][2] += 1; }
                    }
                    if let Ok(c) = ctx.c_stab(&y) {
                        for tm in c.iter() {
                            if alpha_t(ctx.blown(), tm, t) > ay { viol[oi][5] += 1; }
                        }
                    }
                }
                for x in ctx.base().enumerate_generators(1) {
                    let ax = alpha_t(ctx.base(), &x, t);
                    let (pre, up) = match ctx.kind() {
                        knot_lattice::maps::CtxKind::Vertex => (ctx.r_pre_stab(&x), ctx.r_map(&x)),
                        knot_lattice::maps::CtxKind::Edge => (ctx.t_pre_stab(&x).unwrap(), ctx.t_map(&x)),
                    };
                    if alpha_t(ctx.blown(), &pre, t) != ax { viol[oi][4] += 1; }
                    if let Ok(img) = up {
                        for tm in img.iter() {
                            if alpha_t(ctx.blown(), tm, t) > ax { viol[oi][3] += 1; }
                        }
                    }
                }
            }
        }
    }
    for oi in 0..2 {
        println!("orientation {}:", if oi == 0 { "+v0 (printed)" } else { "-v0 (reversed)" });
        for (i, l) in labels.iter().enumerate() {
            println!("  {l}: {} violations", viol[oi][i]);
        }
    }
}
