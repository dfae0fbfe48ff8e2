//! World-level checks with independent oracles, shared by the per-area test
//! files and the acceptance report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softcap::dynamics::{
    box_inertia, detect_contacts, resolve_contacts, step_free_body, GripperBody, GripperGeometry, RigidBody,
    SolverParams,
};
use softcap::env::{compute_reward, EnvConfig, SoftCaptureEnv, WorldState};
use softcap::spatial::{ConvexRegion, EulerXYZ, Obb, Pose, UnitQuaternion, Vec3};

type Check = Result<(), String>;

pub fn random_unit_quat(rng: &mut impl Rng) -> UnitQuaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            return UnitQuaternion::new_normalize(v[0], v[1], v[2], v[3]);
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, half: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

/// Randomized world: half the samples put the gripper near the target so the
/// containment and alignment terms take both values.
pub fn random_world(rng: &mut impl Rng, cfg: &EnvConfig) -> WorldState {
    let target_pos = random_vec(rng, 2.0);
    let target_q = random_unit_quat(rng);
    let (g_pos, g_q) = if rng.random_bool(0.5) {
        let offset = random_vec(rng, 0.05);
        let tilt = UnitQuaternion::from_rotation_vector(random_vec(rng, 0.3));
        let goal = target_q * UnitQuaternion::from_euler_xyz(cfg.goal_orientation_offset);
        (target_pos + offset, goal * tilt)
    } else {
        (random_vec(rng, 2.0), random_unit_quat(rng))
    };
    let mass = rng.random_range(0.5..5.0);
    WorldState {
        gripper: GripperBody::new(Pose::new(g_pos, g_q), &cfg.gripper_geometry).unwrap(),
        target: RigidBody {
            pose: Pose::new(target_pos, target_q),
            lin_vel: random_vec(rng, 0.5),
            ang_vel: random_vec(rng, 1.0),
            mass,
            inertia_diag: box_inertia(mass, cfg.target_half_extents),
        },
        target_half_extents: cfg.target_half_extents,
    }
}

/// Every reward over `n` random states lies in [-1, 3] with each term in its set.
/// Returns how many states had the surround term set, so callers can check coverage.
pub fn reward_bound(n: usize, seed: u64) -> Result<usize, String> {
    let cfg = EnvConfig::default();
    let params = SoftCaptureEnv::new(cfg).unwrap().reward_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut surrounded = 0;
    for i in 0..n {
        let world = random_world(&mut rng, &cfg);
        let force = if rng.random_bool(0.3) {
            rng.random_range(0.0..50.0)
        } else {
            0.0
        };
        let t = compute_reward(&world, force, &params);
        let total = t.total();
        let ok = (-1.0..=3.0).contains(&total)
            && t.r_dist > 0.0
            && t.r_dist <= 1.0
            && t.r_align > 0.0
            && t.r_align <= 1.0
            && (t.r_surr == 0.0 || t.r_surr == 1.0)
            && (t.r_contact == 0.0 || t.r_contact == -1.0);
        if !ok {
            return Err(format!("state {i}: terms {t:?} total {total}"));
        }
        surrounded += usize::from(t.r_surr == 1.0);
    }
    Ok(surrounded)
}

/// Gripper on the target in its goal orientation, perturbed by less than 1e-3.
pub fn max_reward() -> Check {
    let cfg = EnvConfig::default();
    let params = SoftCaptureEnv::new(cfg).unwrap().reward_params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let target_q = UnitQuaternion::from_euler_xyz(EulerXYZ::new(0.3, -0.2, 1.1));
    let target_pos = Vec3::new(0.4, -0.1, 0.7);
    for _ in 0..100 {
        let offset = random_vec(&mut rng, 5e-4);
        let tilt = UnitQuaternion::from_rotation_vector(random_vec(&mut rng, 5e-4));
        let g_q = target_q * UnitQuaternion::from_euler_xyz(cfg.goal_orientation_offset) * tilt;
        let world = WorldState {
            gripper: GripperBody::new(Pose::new(target_pos + offset, g_q), &cfg.gripper_geometry).unwrap(),
            target: RigidBody {
                pose: Pose::new(target_pos, target_q),
                lin_vel: Vec3::ZERO,
                ang_vel: Vec3::ZERO,
                mass: 1.0,
                inertia_diag: box_inertia(1.0, cfg.target_half_extents),
            },
            target_half_extents: cfg.target_half_extents,
        };
        if !detect_contacts(&world.gripper, &world.target_box()).is_empty() {
            return Err("constructed state is in contact".into());
        }
        let t = compute_reward(&world, 0.0, &params);
        if t.r_surr != 1.0 || t.r_contact != 0.0 {
            return Err(format!("expected a contained corner and no contact, got {t:?}"));
        }
        let total = t.total();
        if !(total > 2.99 && total <= 3.0) {
            return Err(format!("reward {total} not in (2.99, 3]"));
        }
    }
    Ok(())
}

fn asymmetric_body(rng: &mut impl Rng) -> RigidBody {
    let mass = rng.random_range(0.5..5.0);
    let he = Vec3::new(
        rng.random_range(0.02..0.2),
        rng.random_range(0.02..0.2),
        rng.random_range(0.02..0.2),
    );
    RigidBody {
        pose: Pose::new(random_vec(rng, 1.0), random_unit_quat(rng)),
        lin_vel: random_vec(rng, 0.5),
        ang_vel: random_vec(rng, 3.0),
        mass,
        inertia_diag: box_inertia(mass, he),
    }
}

/// Torque-free rollouts conserve world angular momentum, rotational energy and
/// linear momentum. Returns the worst relative drifts `(L, E)`.
pub fn conservation(ics: usize, steps: usize) -> Result<(f64, f64), String> {
    let dt = 1.0 / 240.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_l, mut worst_e) = (0.0f64, 0.0f64);
    for ic in 0..ics {
        let start = asymmetric_body(&mut rng);
        let (l0, e0, p0) = (
            start.angular_momentum_world(),
            start.rotational_energy(),
            start.linear_momentum(),
        );
        let mut b = start;
        for step in 0..steps {
            b = step_free_body(&b, dt);
            let dl = (b.angular_momentum_world() - l0).norm() / l0.norm();
            let de = (b.rotational_energy() - e0).abs() / e0;
            worst_l = worst_l.max(dl);
            worst_e = worst_e.max(de);
            if dl > 1e-4 || de > 1e-4 {
                return Err(format!("ic {ic} step {step}: dL {dl:e}, dE {de:e}"));
            }
            if b.linear_momentum() != p0 {
                return Err(format!("ic {ic} step {step}: linear momentum changed"));
            }
        }
    }
    Ok((worst_l, worst_e))
}

/// Palm sphere pressed into the centre of the target's -z face while the gripper
/// moves along +z. Checks the impulse against `m·Δv_n` (and the bias form), plus
/// the non-negative post-resolution relative normal velocity.
pub fn central_impact() -> Check {
    let geo = GripperGeometry::default();
    let he = Vec3::new(0.06, 0.04, 0.05);
    let dt = 1.0 / 240.0;
    let depth = 0.002;
    for (mass, v_g, v_t) in [(1.0, 0.1, 0.0), (3.5, 0.25, -0.05), (0.7, 0.05, 0.02)] {
        let target_z = geo.palm_z + geo.palm_sphere_radius + he.z - depth;
        let target = RigidBody {
            pose: Pose::from_position(Vec3::new(0.0, 0.0, target_z)),
            lin_vel: Vec3::new(0.0, 0.0, v_t),
            ang_vel: Vec3::ZERO,
            mass,
            inertia_diag: box_inertia(mass, he),
        };
        let bx = Obb::new(target.pose, he);
        let mut gripper = GripperBody::new(Pose::default(), &geo).unwrap();
        gripper.lin_vel = Vec3::new(0.0, 0.0, v_g);
        let contacts = detect_contacts(&gripper, &bx);
        if contacts.len() != 1 {
            return Err(format!("expected one palm contact, got {}", contacts.len()));
        }
        let c = contacts[0];
        if (c.normal - Vec3::Z).max_abs() > 1e-12 || (c.depth - depth).abs() > 1e-12 {
            return Err(format!("unexpected contact {c:?}"));
        }
        let vel = |p: Vec3| gripper.point_velocity(p);

        for beta in [0.0, 0.2] {
            let params = SolverParams {
                baumgarte: beta,
                ..SolverParams::default()
            };
            let (after, res) = resolve_contacts(&target, &bx, &contacts, vel, dt, &params);
            let dv_n = (v_g - v_t) + beta * depth / dt;
            let expected = mass * dv_n;
            let j = res.total_normal_impulse;
            if (j - expected).abs() > 0.01 * expected.abs() {
                return Err(format!("mass {mass}, beta {beta}: impulse {j}, closed form {expected}"));
            }
            let rel = (after.point_velocity(c.point) - vel(c.point)).dot(c.normal);
            if rel < -1e-6 {
                return Err(format!("mass {mass}, beta {beta}: relative normal velocity {rel}"));
            }
        }
    }
    Ok(())
}

/// Barycentric containment in the tetrahedron `t`.
fn in_tetrahedron(t: [Vec3; 4], p: Vec3) -> bool {
    let (a, b, c, d) = (t[0], t[1], t[2], t[3]);
    let det = |u: Vec3, v: Vec3, w: Vec3| u.dot(v.cross(w));
    let vol = det(b - a, c - a, d - a);
    if vol.abs() < 1e-14 {
        return false;
    }
    let l1 = det(p - a, c - a, d - a) / vol;
    let l2 = det(b - a, p - a, d - a) / vol;
    let l3 = det(b - a, c - a, p - a) / vol;
    let l0 = 1.0 - l1 - l2 - l3;
    [l0, l1, l2, l3].iter().all(|&l| l >= 0.0)
}

/// A point lies in the hull of a 3-D point set iff it lies in a tetrahedron
/// spanned by four of the points.
pub fn hull_oracle(points: &[Vec3], p: Vec3) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    if in_tetrahedron([points[i], points[j], points[k], points[l]], p) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Hull vertices of a finger envelope: nine finger sphere centers plus three palm points.
pub fn envelope_points(geo: &GripperGeometry) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = geo.collision_spheres().iter().take(9).map(|s| s.center_body).collect();
    for k in 0..3 {
        let a = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
        pts.push(Vec3::new(
            geo.palm_hull_radius * a.cos(),
            geo.palm_hull_radius * a.sin(),
            geo.palm_hull_z,
        ));
    }
    pts
}

fn random_geometry(rng: &mut impl Rng) -> GripperGeometry {
    let low = rng.random_range(-0.1..-0.03);
    let high = rng.random_range(0.03..0.1);
    GripperGeometry {
        finger_clearance: rng.random_range(0.08..0.25),
        finger_sphere_radius: rng.random_range(0.005..0.02),
        finger_levels: [low, rng.random_range(low + 0.01..high - 0.01), high],
        palm_hull_z: rng.random_range(-0.15..-0.11),
        palm_hull_radius: rng.random_range(0.02..0.08),
        ..GripperGeometry::default()
    }
}

/// Agreement between the half-space envelope test and the hull oracle on
/// `cases` random (geometry, point) pairs. Points within 1e-6 of a face are
/// redrawn. Returns the number of inside cases.
pub fn containment(cases: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0;
    let mut done = 0;
    while done < cases {
        let geo = random_geometry(&mut rng);
        let pts = envelope_points(&geo);
        let region: ConvexRegion = geo.finger_region().map_err(|e| e.to_string())?;
        let pose = Pose::new(random_vec(&mut rng, 1.0), random_unit_quat(&mut rng));
        let local = if rng.random_bool(0.5) {
            // Jittered convex combination: lands on both sides of the boundary.
            let w: Vec<f64> = pts.iter().map(|_| rng.random::<f64>().powi(3)).collect();
            let s: f64 = w.iter().sum();
            let c = pts.iter().zip(&w).fold(Vec3::ZERO, |acc, (p, wi)| acc + *p * (wi / s));
            c * rng.random_range(0.8..1.3) + random_vec(&mut rng, 0.01)
        } else {
            random_vec(&mut rng, 0.2)
        };
        if region.max_violation_local(local).abs() < 1e-6 {
            continue;
        }
        let world = pose.transform_point(local);
        let got = region.contains_point(&pose, world, 0.0);
        let want = hull_oracle(&pts, local);
        if got != want {
            return Err(format!(
                "case {done}: region says {got}, oracle says {want} for {local:?} in {geo:?}"
            ));
        }
        inside += usize::from(want);
        done += 1;
    }
    Ok(inside)
}

/// Steers the grasp center past the target along the finger axis, with noise,
/// so the palm runs into it.
pub fn scripted_action(world: &WorldState, rng: &mut impl Rng) -> [f64; 6] {
    let q = world.gripper.pose.orientation;
    let aim = world.target.pose.position + q.rotate(Vec3::new(0.0, 0.0, 0.12));
    let d = q.inverse_rotate(aim - world.gripper.pose.position);
    let mut a = [0.0; 6];
    for i in 0..3 {
        a[i] = (d[i] * 20.0).clamp(-1.0, 1.0);
    }
    for x in a.iter_mut() {
        *x = (*x + rng.random_range(-0.3..0.3)).clamp(-1.0, 1.0);
    }
    a
}

/// Tactile and non-tactile environments driven by the same seeds and actions
/// produce identical first 39 observation entries and rewards. Returns the
/// number of steps with a non-zero tactile reading.
pub fn tactile_only_difference(episodes: u64) -> Result<usize, String> {
    let cfg = EnvConfig::default();
    let mut off = SoftCaptureEnv::new(cfg.with_tactile(false)).unwrap();
    let mut on = SoftCaptureEnv::new(cfg.with_tactile(true)).unwrap();
    let mut touched = 0;
    for ep in 0..episodes {
        let (o0, o1) = (off.reset(ep), on.reset(ep));
        if o0.len() != 39 || o1.len() != 40 || o0.as_slice() != &o1.as_slice()[..39] {
            return Err(format!("episode {ep}: reset observations differ"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ep);
        while !off.is_done() {
            let a = scripted_action(off.world(), &mut rng);
            let (r0, r1) = (
                off.step(&a).map_err(|e| e.to_string())?,
                on.step(&a).map_err(|e| e.to_string())?,
            );
            if r0.obs.as_slice() != &r1.obs.as_slice()[..39] || r0.reward != r1.reward {
                return Err(format!("episode {ep} step {}: streams diverged", off.step_count()));
            }
            if r1.obs.as_slice()[39] != r1.info.contact_force {
                return Err("entry 39 is not the contact force".into());
            }
            touched += usize::from(r1.obs.as_slice()[39] != 0.0);
        }
    }
    if touched == 0 {
        return Err("scripted episodes never touched the target".into());
    }
    Ok(touched)
}
