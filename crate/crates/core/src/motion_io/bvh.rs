//! BVH (Biovision hierarchy) reading and writing.
//!
//! Reading honors each joint's declared channel order. Position channels
//! replace the joint's OFFSET for that frame. Joints with a zero OFFSET
//! coincide with their parent; they still contribute rotation but produce
//! no joint of their own, and `End Site` blocks are dropped unless their
//! offset is nonzero.
//!
//! Writing always emits `Zrotation Yrotation Xrotation`. Because a BVH
//! joint has one orientation shared by all of its children while the pose
//! tree carries one versor per bone, a joint with several children gets a
//! zero-offset carrier joint per child bone.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::kinematics::{quat_to_euler, Skeleton, Versor};

use super::MotionClip;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Channel {
    Xpos,
    Ypos,
    Zpos,
    Xrot,
    Yrot,
    Zrot,
}

impl Channel {
    fn parse(tok: &str) -> Option<Self> {
        Some(match tok.to_ascii_lowercase().as_str() {
            "xposition" => Channel::Xpos,
            "yposition" => Channel::Ypos,
            "zposition" => Channel::Zpos,
            "xrotation" => Channel::Xrot,
            "yrotation" => Channel::Yrot,
            "zrotation" => Channel::Zrot,
            _ => return None,
        })
    }
}

#[derive(Debug)]
struct BvhJoint {
    name: String,
    parent: Option<usize>,
    offset: Vec3,
    channels: Vec<Channel>,
    /// Whether this joint appears in the output skeleton.
    emitted: bool,
}

struct Lines<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, t)| !t.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        let last = self.lines.last().map_or(0, |l| l.0);
        let item = self.lines.get(self.pos).cloned().ok_or(Error::Parse {
            line: last + 1,
            msg: "unexpected end of file".into(),
        })?;
        self.pos += 1;
        Ok(item)
    }

    fn peek(&self) -> Option<&(usize, Vec<&'a str>)> {
        self.lines.get(self.pos)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn number(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn expect(lines: &mut Lines<'_>, word: &str) -> Result<usize> {
    let (n, toks) = lines.next()?;
    if !toks[0].eq_ignore_ascii_case(word) {
        return Err(parse_err(n, format!("expected {word}, found {:?}", toks[0])));
    }
    Ok(n)
}

fn parse_offset(lines: &mut Lines<'_>) -> Result<Vec3> {
    let (n, toks) = lines.next()?;
    if !toks[0].eq_ignore_ascii_case("OFFSET") || toks.len() != 4 {
        return Err(parse_err(n, "expected OFFSET x y z"));
    }
    Ok([number(n, toks[1])?, number(n, toks[2])?, number(n, toks[3])?])
}

/// Parses one joint block; the keyword line has already been consumed.
fn parse_joint(lines: &mut Lines<'_>, joints: &mut Vec<BvhJoint>, name: String, parent: Option<usize>) -> Result<()> {
    expect(lines, "{")?;
    let offset = parse_offset(lines)?;
    let mut channels = Vec::new();
    if let Some((n, toks)) = lines.peek().cloned() {
        if toks[0].eq_ignore_ascii_case("CHANNELS") {
            lines.next()?;
            let count: usize = toks
                .get(1)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| parse_err(n, "CHANNELS needs a count"))?;
            if toks.len() != count + 2 {
                return Err(parse_err(
                    n,
                    format!("CHANNELS declares {count} but lists {}", toks.len() - 2),
                ));
            }
            for t in &toks[2..] {
                channels.push(Channel::parse(t).ok_or_else(|| parse_err(n, format!("unknown channel {t:?}")))?);
            }
        }
    }
    let idx = joints.len();
    let emitted = parent.is_none() || geom::norm3(offset) > 1e-12;
    joints.push(BvhJoint {
        name,
        parent,
        offset,
        channels,
        emitted,
    });
    loop {
        let (n, toks) = lines.next()?;
        let kw = toks[0];
        if kw == "}" {
            return Ok(());
        } else if kw.eq_ignore_ascii_case("JOINT") {
            let name = toks.get(1).ok_or_else(|| parse_err(n, "JOINT needs a name"))?;
            parse_joint(lines, joints, name.to_string(), Some(idx))?;
        } else if kw.eq_ignore_ascii_case("End") {
            expect(lines, "{")?;
            let offset = parse_offset(lines)?;
            expect(lines, "}")?;
            if geom::norm3(offset) > 1e-12 {
                let name = format!("{}_end", joints[idx].name);
                joints.push(BvhJoint {
                    name,
                    parent: Some(idx),
                    offset,
                    channels: Vec::new(),
                    emitted: true,
                });
            }
        } else if kw.eq_ignore_ascii_case("ROOT") {
            return Err(Error::Structure(format!(
                "line {n}: ROOT nested inside joint {}",
                joints[idx].name
            )));
        } else {
            return Err(parse_err(n, format!("unexpected token {kw:?} in joint block")));
        }
    }
}

fn elemental(ch: Channel, degrees: f64) -> Versor {
    let axis = match ch {
        Channel::Xrot => [1.0, 0.0, 0.0],
        Channel::Yrot => [0.0, 1.0, 0.0],
        Channel::Zrot => [0.0, 0.0, 1.0],
        _ => unreachable!("position channel has no rotation"),
    };
    Versor::from_axis_angle(axis, degrees.to_radians())
}

/// Parses BVH text into world joint positions per frame.
pub fn parse_bvh(text: &str, source_id: &str) -> Result<MotionClip> {
    let mut lines = Lines::new(text);
    expect(&mut lines, "HIERARCHY")?;
    let (n, toks) = lines.next()?;
    if !toks[0].eq_ignore_ascii_case("ROOT") {
        return Err(parse_err(n, "expected ROOT"));
    }
    let root_name = toks.get(1).ok_or_else(|| parse_err(n, "ROOT needs a name"))?;
    let mut joints = Vec::new();
    parse_joint(&mut lines, &mut joints, root_name.to_string(), None)?;

    let (n, toks) = lines.next()?;
    if toks[0].eq_ignore_ascii_case("ROOT") {
        return Err(Error::Structure(format!("line {n}: more than one ROOT")));
    }
    if !toks[0].eq_ignore_ascii_case("MOTION") {
        return Err(parse_err(n, format!("expected MOTION, found {:?}", toks[0])));
    }
    let (n, toks) = lines.next()?;
    if !toks[0].eq_ignore_ascii_case("Frames:") || toks.len() != 2 {
        return Err(parse_err(n, "expected Frames: <count>"));
    }
    let frame_count: usize = toks[1]
        .parse()
        .map_err(|_| parse_err(n, format!("bad frame count {:?}", toks[1])))?;
    let (n, toks) = lines.next()?;
    if toks.len() != 3 || !toks[0].eq_ignore_ascii_case("Frame") || !toks[1].eq_ignore_ascii_case("Time:") {
        return Err(parse_err(n, "expected Frame Time: <seconds>"));
    }
    let dt = number(n, toks[2])?;
    if dt <= 0.0 {
        return Err(parse_err(n, "frame time must be positive"));
    }

    let width: usize = joints.iter().map(|j| j.channels.len()).sum();
    let emitted: Vec<usize> = (0..joints.len()).filter(|&i| joints[i].emitted).collect();
    let mut slot = vec![usize::MAX; joints.len()];
    for (k, &i) in emitted.iter().enumerate() {
        slot[i] = k;
    }
    let skeleton = output_skeleton(&joints, &emitted, &slot)?;

    let mut frames = Vec::with_capacity(frame_count);
    while let Some((n, toks)) = lines.peek().cloned() {
        lines.next()?;
        if toks.len() != width {
            return Err(parse_err(
                n,
                format!("motion row has {} values, channels declare {width}", toks.len()),
            ));
        }
        let values = toks.iter().map(|t| number(n, t)).collect::<Result<Vec<_>>>()?;
        frames.push(pose_positions(&joints, &values, &emitted));
    }
    if frames.len() != frame_count {
        let last = lines.lines.last().map_or(0, |l| l.0);
        return Err(parse_err(
            last,
            format!("header declares {frame_count} frames, found {}", frames.len()),
        ));
    }
    let clip = MotionClip {
        skeleton,
        frames,
        frame_rate: 1.0 / dt,
        source_id: source_id.to_string(),
    };
    clip.validate()?;
    Ok(clip)
}

fn output_skeleton(joints: &[BvhJoint], emitted: &[usize], slot: &[usize]) -> Result<Skeleton> {
    let rest: Vec<Vec3> = {
        let mut r = vec![[0.0; 3]; joints.len()];
        for (i, j) in joints.iter().enumerate() {
            r[i] = match j.parent {
                None => [0.0; 3],
                Some(p) => geom::add3(r[p], j.offset),
            };
        }
        r
    };
    let mut names = Vec::new();
    let mut parents = Vec::new();
    let mut offsets = Vec::new();
    for &i in emitted {
        let mut p = joints[i].parent;
        while let Some(k) = p {
            if joints[k].emitted {
                break;
            }
            p = joints[k].parent;
        }
        names.push(joints[i].name.clone());
        match p {
            None => {
                parents.push(-1);
                offsets.push([0.0; 3]);
            }
            Some(k) => {
                parents.push(slot[k] as i64);
                offsets.push(geom::sub3(rest[i], rest[k]));
            }
        }
    }
    Skeleton::new(names, parents, offsets)
}

fn pose_positions(joints: &[BvhJoint], values: &[f64], emitted: &[usize]) -> Vec<Vec3> {
    let mut global = vec![Versor::IDENTITY; joints.len()];
    let mut pos = vec![[0.0; 3]; joints.len()];
    let mut cursor = 0;
    for (i, j) in joints.iter().enumerate() {
        let mut local_rot = Versor::IDENTITY;
        let mut translation = j.offset;
        let mut has_position = false;
        let mut moved = [0.0; 3];
        for &ch in &j.channels {
            let v = values[cursor];
            cursor += 1;
            match ch {
                Channel::Xpos => (moved[0], has_position) = (v, true),
                Channel::Ypos => (moved[1], has_position) = (v, true),
                Channel::Zpos => (moved[2], has_position) = (v, true),
                rot => local_rot = local_rot * elemental(rot, v),
            }
        }
        if has_position {
            translation = moved;
        }
        match j.parent {
            None => {
                pos[i] = translation;
                global[i] = local_rot;
            }
            Some(p) => {
                pos[i] = geom::add3(pos[p], global[p].rotate(translation));
                global[i] = global[p] * local_rot;
            }
        }
    }
    emitted.iter().map(|&i| pos[i]).collect()
}

/// Formats with six significant digits, trimming trailing zeros.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    let decimals = (5 - e).clamp(0, 12) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

enum Node {
    /// A skeleton joint.
    Joint(usize),
    /// Zero-offset carrier for the bone `parent -> child`.
    Carrier { parent: usize, child: usize },
}

/// Writes a clip as BVH. `rotations[t]` holds the `J-1` per-bone versors of
/// frame `t`; the root translation comes from the clip positions.
pub fn write_bvh(clip: &MotionClip, rotations: &[Vec<Versor>]) -> Result<String> {
    let skel = &clip.skeleton;
    let jn = skel.joint_count();
    if rotations.len() != clip.frames.len() {
        return Err(Error::shape(format!(
            "{} rotation frames for {} position frames",
            rotations.len(),
            clip.frames.len()
        )));
    }
    if let Some(r) = rotations.iter().find(|r| r.len() + 1 != jn) {
        return Err(Error::shape(format!("{} rotations for {jn} joints", r.len())));
    }
    let children: Vec<Vec<usize>> = (0..jn).map(|j| skel.children(j)).collect();

    // depth-first order of BVH nodes together with their BVH parents
    let mut order: Vec<(Node, Option<usize>)> = Vec::new();
    fn visit(j: usize, parent: Option<usize>, children: &[Vec<usize>], order: &mut Vec<(Node, Option<usize>)>) {
        let me = order.len();
        order.push((Node::Joint(j), parent));
        if children[j].len() == 1 {
            visit(children[j][0], Some(me), children, order);
        } else {
            for &c in &children[j] {
                let carrier = order.len();
                order.push((Node::Carrier { parent: j, child: c }, Some(me)));
                visit(c, Some(carrier), children, order);
            }
        }
    }
    visit(0, None, &children, &mut order);

    let mut out = String::from("HIERARCHY\n");
    write_hierarchy(&mut out, skel, &order, 0, 0);
    let _ = writeln!(out, "MOTION");
    let _ = writeln!(out, "Frames: {}", clip.frames.len());
    let _ = writeln!(out, "Frame Time: {}", sig6(1.0 / clip.frame_rate));

    for (t, rots) in rotations.iter().enumerate() {
        // global orientation of every node; a joint with exactly one child
        // carries that bone's rotation, carriers carry their own bone's
        let global: Vec<Versor> = order
            .iter()
            .map(|(node, _)| match *node {
                Node::Joint(j) if children[j].len() == 1 => rots[children[j][0] - 1].normalize(),
                Node::Joint(_) => Versor::IDENTITY,
                Node::Carrier { child, .. } => rots[child - 1].normalize(),
            })
            .collect();
        let mut row: Vec<String> = Vec::new();
        let root = clip.frames[t][0];
        row.extend(root.iter().map(|&v| sig6(v)));
        for (k, (_, parent)) in order.iter().enumerate() {
            let local = match parent {
                None => global[k],
                Some(p) => global[*p].conjugate() * global[k],
            };
            let e = quat_to_euler(local.normalize());
            row.extend(e.iter().map(|a| sig6(a.to_degrees())));
        }
        let _ = writeln!(out, "{}", row.join(" "));
    }
    Ok(out)
}

fn write_hierarchy(out: &mut String, skel: &Skeleton, order: &[(Node, Option<usize>)], k: usize, depth: usize) {
    let pad = "  ".repeat(depth);
    let (offset, name) = match order[k].0 {
        Node::Joint(j) => {
            let offset = if j == 0 { [0.0; 3] } else { skel.offsets[j] };
            (offset, skel.names[j].clone())
        }
        Node::Carrier { parent, child } => ([0.0; 3], format!("{}_to_{}", skel.names[parent], skel.names[child])),
    };
    let keyword = if k == 0 { "ROOT" } else { "JOINT" };
    let _ = writeln!(out, "{pad}{keyword} {name}");
    let _ = writeln!(out, "{pad}{{");
    let _ = writeln!(
        out,
        "{pad}  OFFSET {} {} {}",
        sig6(offset[0]),
        sig6(offset[1]),
        sig6(offset[2])
    );
    if k == 0 {
        let _ = writeln!(
            out,
            "{pad}  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation"
        );
    } else {
        let _ = writeln!(out, "{pad}  CHANNELS 3 Zrotation Yrotation Xrotation");
    }
    let kids: Vec<usize> = (0..order.len()).filter(|&c| order[c].1 == Some(k)).collect();
    if kids.is_empty() {
        let _ = writeln!(out, "{pad}  End Site");
        let _ = writeln!(out, "{pad}  {{");
        let _ = writeln!(out, "{pad}    OFFSET 0 0 0");
        let _ = writeln!(out, "{pad}  }}");
    }
    for c in kids {
        write_hierarchy(out, skel, order, c, depth + 1);
    }
    let _ = writeln!(out, "{pad}}}");
}
