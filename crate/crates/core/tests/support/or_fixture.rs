/// (token counts, per-segment predictions, expected sentence labels), worked
/// out by hand for a 256 budget.
pub const OR_FIXTURE: &[(&[usize], &[&[u8]], &[u8])] = &[
    (&[10], &[&[1]], &[1]),
    (&[10], &[&[0]], &[0]),
    (&[100, 100, 100, 100], &[&[0, 1], &[0, 0], &[0, 0]], &[0, 1, 0, 0]),
    (&[100, 100, 100, 100], &[&[0, 0], &[1, 0], &[0, 1]], &[0, 1, 0, 1]),
    (&[50, 50, 50], &[&[1, 0, 1]], &[1, 0, 1]),
    (&[300, 10], &[&[1], &[0]], &[1, 0]),
    (&[10, 300, 10], &[&[0], &[1], &[0]], &[0, 1, 0]),
    (&[200, 50, 50, 200], &[&[0, 0], &[0, 1], &[0, 0]], &[0, 0, 1, 0]),
    (&[128, 128, 128], &[&[1, 1], &[0, 0]], &[1, 1, 0]),
    (&[100, 100, 100, 100, 100], &[&[0, 0], &[0, 0], &[0, 0], &[0, 1]], &[0, 0, 0, 0, 1]),
    (&[60, 60, 60, 60, 60], &[&[0, 0, 0, 0], &[0, 0, 0, 1]], &[0, 0, 0, 0, 1]),
    (&[60, 60, 60, 60, 60], &[&[1, 0, 0, 0], &[0, 0, 0, 0]], &[1, 0, 0, 0, 0]),
    (&[256], &[&[1]], &[1]),
    (&[257, 257], &[&[0], &[1]], &[0, 1]),
    (&[100, 200, 100], &[&[1], &[0], &[1]], &[1, 0, 1]),
    (&[100, 100, 100], &[&[1, 0], &[0, 0]], &[1, 0, 0]),
    (&[100, 100, 100], &[&[0, 1], &[1, 0]], &[0, 1, 0]),
    (&[100, 100, 100], &[&[0, 0], &[0, 1]], &[0, 0, 1]),
    (&[20, 20, 20, 20], &[&[0, 0, 0, 0]], &[0, 0, 0, 0]),
    (&[150, 150, 150, 150], &[&[0], &[1], &[1], &[0]], &[0, 1, 1, 0]),
];
