//! Machine timelines.
//!
//! Segments come straight from [`evaluate_machine`]: batch start times and
//! operation completions. Each machine is tiled from its release date to its
//! finish time. Machines without batches produce no rows. Labels are
//! one-based (`O1` is operation 0, `S1` is the setup of family 0).

use std::fmt::Write as _;
use std::io::Write;

use batchsched_core::format::read_solution;
use batchsched_core::{evaluate_machine, Instance, MachineId, Solution, Time};

use crate::args::GanttArgs;
use crate::commands::{load_instance, write_file};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Idle,
    Setup,
    Op,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Idle => "idle",
            SegmentKind::Setup => "setup",
            SegmentKind::Op => "op",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub machine: MachineId,
    pub kind: SegmentKind,
    pub start: Time,
    pub end: Time,
    pub label: String,
}

pub fn segments(inst: &Instance, sol: &Solution) -> CliResult<Vec<Segment>> {
    let mut out = Vec::new();
    for (k, batches) in sol.machines.iter().enumerate() {
        if batches.is_empty() {
            continue;
        }
        let me = evaluate_machine(inst, k, batches)?;
        let mut cursor = inst.machine(k).release;
        let mut done = me.completions.iter();
        for (batch, &start) in batches.iter().zip(&me.batch_starts) {
            let seg = |kind, start, end, label: String| Segment { machine: k, kind, start, end, label };
            if start > cursor {
                out.push(seg(SegmentKind::Idle, cursor, start, String::new()));
            }
            let first_op = batch.ops[0];
            let (_, first_done) = me.completions.iter().find(|(i, _)| *i == first_op).expect("op completion");
            let setup_end = first_done - inst.op(first_op).proc_time;
            if setup_end > start {
                out.push(seg(SegmentKind::Setup, start, setup_end, format!("S{}", batch.family + 1)));
            }
            cursor = setup_end;
            for _ in &batch.ops {
                let &(i, c) = done.next().expect("op completion");
                out.push(seg(SegmentKind::Op, cursor, c, format!("O{}", i + 1)));
                cursor = c;
            }
        }
    }
    Ok(out)
}

pub fn segments_csv(segs: &[Segment]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["machine", "kind", "start", "end", "label"])?;
    for s in segs {
        w.write_record([s.machine.to_string(), s.kind.as_str().into(), s.start.to_string(), s.end.to_string(), s.label.clone()])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const ROW_H: i64 = 30;
const LEFT: i64 = 60;
const WIDTH: f64 = 900.0;
const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];

/// Static SVG with one row per machine.
pub fn segments_svg(inst: &Instance, segs: &[Segment]) -> String {
    let horizon = segs.iter().map(|s| s.end).max().unwrap_or(0).max(1);
    let scale = WIDTH / horizon as f64;
    let m = inst.num_machines() as i64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="10">"#,
        LEFT + WIDTH as i64 + 20,
        m * ROW_H + 30
    );
    for k in 0..m {
        let _ = writeln!(s, r#"<text x="4" y="{}">M{}</text>"#, k * ROW_H + 19, k + 1);
    }
    for seg in segs {
        let x = LEFT as f64 + seg.start as f64 * scale;
        let w = (seg.end - seg.start) as f64 * scale;
        let y = seg.machine as i64 * ROW_H + 4;
        let fill = match seg.kind {
            SegmentKind::Idle => "#eeeeee".to_string(),
            SegmentKind::Setup => "#555555".to_string(),
            SegmentKind::Op => {
                let i: usize = seg.label[1..].parse().unwrap_or(1);
                PALETTE[inst.op(i - 1).family % PALETTE.len()].to_string()
            }
        };
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y}" width="{w:.2}" height="{}" fill="{fill}" stroke="white"><title>{} {} [{}, {}]</title></rect>"#,
            ROW_H - 8,
            seg.kind.as_str(),
            seg.label,
            seg.start,
            seg.end
        );
        if seg.kind != SegmentKind::Idle && w > 18.0 {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{}" fill="white">{}</text>"#, x + 2.0, y + 15, seg.label);
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="{}">0</text><text x="{}" y="{}" text-anchor="end">{horizon}</text>"#,
        m * ROW_H + 20,
        LEFT + WIDTH as i64,
        m * ROW_H + 20
    );
    s.push_str("</svg>\n");
    s
}

pub fn cmd_gantt(args: &GanttArgs, out: &mut dyn Write) -> CliResult<()> {
    let inst = load_instance(&args.instance)?;
    let sol = read_solution(&args.solution, &inst)
        .map_err(|e| CliError::Domain(format!("{}: {e}", args.solution.display())))?;
    let segs = segments(&inst, &sol)?;
    let table = segments_csv(&segs)?;
    match &args.out {
        Some(p) => write_file(p, table.as_bytes())?,
        None => out.write_all(table.as_bytes())?,
    }
    if let Some(p) = &args.svg {
        write_file(p, segments_svg(&inst, &segs).as_bytes())?;
    }
    Ok(())
}
