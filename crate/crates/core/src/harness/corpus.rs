//! Bundled microbenchmarks, assembled in place.

use crate::asm::Asm;
use crate::memsys::{MemImage, CONSOLE_ADDR};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Benchmark {
    pub name: &'static str,
    pub imem: MemImage,
    pub dmem: MemImage,
    /// Expected console output, when the benchmark prints.
    pub console: Option<&'static [u8]>,
    /// Whether the benchmark is dominated by control flow.
    pub branchy: bool,
}

fn bench(name: &'static str, a: &Asm, dmem: Vec<u32>, branchy: bool) -> Benchmark {
    Benchmark {
        name,
        imem: MemImage::new(0, a.finish().expect("corpus assembles")),
        dmem: MemImage::new(0, dmem),
        console: None,
        branchy,
    }
}

/// Every bundled benchmark.
pub fn all() -> Vec<Benchmark> {
    vec![
        alu_straight(),
        dep_chain(),
        load_use_ladder(),
        nested_loops(NESTED_OUTER, NESTED_INNER),
        calls(),
        bubble_sort(),
        branch_mix(),
        console_hello(),
    ]
}

/// Only ECALL.
pub fn empty() -> Benchmark {
    bench("empty", Asm::new(0).ecall(), vec![], false)
}

/// Independent register-register and register-immediate arithmetic.
pub fn alu_straight() -> Benchmark {
    let mut a = Asm::new(0);
    for r in 1..16u8 {
        a.li(r, 0x0101_0101u32.wrapping_mul(r as u32).rotate_left(r as u32));
    }
    for i in 0..12u8 {
        let (x, y, z) = (1 + i, 2 + i, 3 + i);
        a.add(16, x, y)
            .sub(17, y, z)
            .xor(18, x, z)
            .or(19, x, y)
            .and(20, y, z)
            .sll(21, x, z)
            .srl(22, y, x)
            .sra(23, z, y)
            .slt(24, x, z)
            .sltu(25, z, x)
            .addi(26, x, -7)
            .xori(27, y, 0x5a5)
            .ori(28, z, 0x0f0)
            .andi(29, x, 0x7ff)
            .slli(30, y, 7)
            .srai(31, z, 3)
            .slti(16, x, -1)
            .sltiu(17, y, 100)
            .srli(18, z, 31)
            .lui(19, 0xabcde)
            .auipc(20, 0x12);
    }
    a.ecall();
    bench("alu_straight", &a, vec![], false)
}

/// Each instruction consumes the previous result, exercising both bypasses.
pub fn dep_chain() -> Benchmark {
    let mut a = Asm::new(0);
    a.li(1, 200).li(2, 1).label("loop");
    a.add(2, 2, 2)
        .xor(2, 2, 1)
        .sub(3, 2, 1)
        .or(2, 3, 2)
        .srli(4, 2, 3)
        .add(2, 4, 3)
        .addi(1, 1, -1)
        .bne(1, 0, "loop")
        .sw(2, 0, 0)
        .ecall();
    bench("dep_chain", &a, vec![], false)
}

pub const LADDER_LEN: u32 = 64;

/// Array sum with every load feeding the next instruction, then a walk down
/// a linked list where each load feeds the loop branch.
pub fn load_use_ladder() -> Benchmark {
    let mut a = Asm::new(0);
    a.li(1, 0).li(2, LADDER_LEN).li(5, 0).label("sum");
    a.lw(3, 0, 1)
        .add(5, 5, 3)
        .lh(4, 2, 1)
        .xor(5, 5, 4)
        .addi(1, 1, 4)
        .addi(2, 2, -1)
        .bne(2, 0, "sum")
        .sw(5, 0x400, 0);
    // Linked list at 0x200: each node holds the address of the next one, 0 ends it.
    a.li(1, 0x200).li(6, 0).label("walk");
    a.lw(1, 0, 1).addi(6, 6, 1).bne(1, 0, "walk").sw(6, 0x404, 0).ecall();

    let mut dmem = vec![0u32; 0x200 / 4 + 32];
    for (i, w) in dmem.iter_mut().take(LADDER_LEN as usize).enumerate() {
        *w = (i as u32).wrapping_mul(0x9e37_79b9) ^ 0x8000_8000;
    }
    // Visit the 31 nodes in a scrambled order starting from node 0.
    let nodes = 31usize;
    let order: Vec<usize> = (0..nodes).map(|k| k * 7 % nodes).collect();
    for (k, &node) in order.iter().enumerate() {
        dmem[0x200 / 4 + node] = order.get(k + 1).map_or(0, |&n| 0x200 + 4 * n as u32);
    }
    bench("load_use_ladder", &a, dmem, false)
}

pub const NESTED_OUTER: u32 = 25;
pub const NESTED_INNER: u32 = 40;

/// Counted loop nest. Retires `2 + outer * (3 + 3 * inner)` instructions.
pub fn nested_loops(outer: u32, inner: u32) -> Benchmark {
    assert!(outer > 0 && inner > 0 && outer < 2048 && inner < 2048);
    let mut a = Asm::new(0);
    a.li(1, outer).label("outer").li(2, inner).label("inner");
    a.add(3, 3, 2)
        .addi(2, 2, -1)
        .bne(2, 0, "inner")
        .addi(1, 1, -1)
        .bne(1, 0, "outer")
        .ecall();
    bench("nested_loops", &a, vec![], true)
}

pub fn nested_loops_retired(outer: u32, inner: u32) -> u64 {
    2 + outer as u64 * (3 + 3 * inner as u64)
}

/// Two call sites, JAL in and JALR out.
pub fn calls() -> Benchmark {
    let mut a = Asm::new(0);
    a.li(8, 30).li(10, 0).label("loop");
    a.mv(11, 8)
        .call("square")
        .add(10, 10, 12)
        .andi(11, 8, 7)
        .call("triangle")
        .sub(10, 10, 12)
        .addi(8, 8, -1)
        .bne(8, 0, "loop")
        .sw(10, 0, 0)
        .ecall();
    // x12 = x11 * x11 by repeated addition.
    a.label("square").li(12, 0).mv(13, 11).label("sq");
    a.beq(13, 0, "sq_done").add(12, 12, 11).addi(13, 13, -1).j("sq").label("sq_done").ret();
    // x12 = x11 * (x11 + 1) / 2.
    a.label("triangle").li(12, 0).label("tri");
    a.beq(11, 0, "tri_done").add(12, 12, 11).addi(11, 11, -1).j("tri").label("tri_done").ret();
    bench("calls", &a, vec![], true)
}

pub const SORT_LEN: usize = 24;

pub fn sort_input() -> Vec<u32> {
    let mut x = 0x2545_f491u32;
    (0..SORT_LEN)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 17;
            x ^= x << 5;
            x % 1000
        })
        .collect()
}

/// Bubble sort of [`sort_input`] in place at address 0.
pub fn bubble_sort() -> Benchmark {
    let mut a = Asm::new(0);
    a.li(20, SORT_LEN as u32).addi(21, 20, -1).label("pass");
    a.beq(21, 0, "end").li(22, 0).li(23, 0).label("inner");
    a.bge(22, 21, "next_pass")
        .lw(24, 0, 23)
        .lw(25, 4, 23)
        .bge(25, 24, "noswap")
        .sw(25, 0, 23)
        .sw(24, 4, 23)
        .label("noswap")
        .addi(22, 22, 1)
        .addi(23, 23, 4)
        .j("inner")
        .label("next_pass")
        .addi(21, 21, -1)
        .j("pass")
        .label("end")
        .ecall();
    bench("bubble_sort", &a, sort_input(), true)
}

/// A pseudo-random 50% branch, a period-4 branch and a biased branch per
/// iteration.
pub fn branch_mix() -> Benchmark {
    let mut a = Asm::new(0);
    a.li(1, 300).li(2, 12345).label("loop");
    a.slli(3, 2, 13).xor(2, 2, 3).srli(3, 2, 17).xor(2, 2, 3).slli(3, 2, 5).xor(2, 2, 3);
    a.andi(4, 2, 1).beq(4, 0, "s1").addi(6, 6, 1).label("s1");
    a.andi(4, 1, 3).bne(4, 0, "s2").addi(7, 7, 1).label("s2");
    a.andi(4, 2, 0x30).bne(4, 0, "s3").addi(8, 8, 1).label("s3");
    a.addi(1, 1, -1).bne(1, 0, "loop").ecall();
    bench("branch_mix", &a, vec![], true)
}

pub const HELLO: &[u8] = b"hello from the pipeline\n";

/// Copies a NUL-terminated string from data memory to the console.
pub fn console_hello() -> Benchmark {
    let mut a = Asm::new(0);
    a.li(1, 0).li(2, CONSOLE_ADDR).label("loop");
    a.lbu(3, 0, 1).beq(3, 0, "done").sb(3, 0, 2).addi(1, 1, 1).j("loop").label("done").ecall();
    let mut bytes = HELLO.to_vec();
    bytes.push(0);
    while !bytes.len().is_multiple_of(4) {
        bytes.push(0);
    }
    let dmem = MemImage::from_bin(&bytes).expect("padded").words;
    let mut b = bench("console_hello", &a, dmem, false);
    b.console = Some(HELLO);
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcsim::{run, ArchState};
    use crate::memsys::{MemSystem, Target};

    fn reference(b: &Benchmark) -> (crate::funcsim::FuncRun, MemSystem) {
        let mut m = MemSystem::default();
        m.load_image(&b.imem, Target::Imem).unwrap();
        m.load_image(&b.dmem, Target::Dmem).unwrap();
        let r = run(&mut ArchState::new(0), &mut m, 10_000_000);
        (r, m)
    }

    #[test]
    fn every_benchmark_halts_on_the_reference() {
        for b in all().iter().chain([empty()].iter()) {
            let (r, m) = reference(b);
            assert!(r.exit.is_halted(), "{}: {}", b.name, r.exit);
            if let Some(c) = b.console {
                assert_eq!(m.console(), c);
            }
        }
    }

    #[test]
    fn nested_loop_retired_count() {
        for (o, i) in [(1, 1), (3, 5), (NESTED_OUTER, NESTED_INNER)] {
            let (r, _) = reference(&nested_loops(o, i));
            assert_eq!(r.retired, nested_loops_retired(o, i));
        }
    }

    #[test]
    fn sort_sorts() {
        let (_, m) = reference(&bubble_sort());
        let mut want = sort_input();
        want.sort();
        assert_eq!(&m.dmem_words()[..SORT_LEN], &want[..]);
    }

    #[test]
    fn calls_compute_sums() {
        let (r, _) = reference(&calls());
        let want: i64 = (1..=30i64).map(|n| n * n - (n & 7) * ((n & 7) + 1) / 2).sum();
        assert_eq!(r.log.last().unwrap().regs_after[10] as i32 as i64, want);
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = all().iter().map(|b| b.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), all().len());
    }
}
