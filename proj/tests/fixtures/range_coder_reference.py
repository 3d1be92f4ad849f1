"""Reference range coder with an unbounded integer accumulator (no carry logic).

Prints golden payloads as hex for the sequences used in test_coding.
"""


def encode(symbols, alphabet):
    if not symbols:
        return b""
    freq = [1] * alphabet
    acc = 0  # every byte emitted so far, followed by the 32 bits of low
    shifts = 0
    rng = 0xFFFFFFFF
    for s in symbols:
        total = sum(freq)
        r = rng // total
        acc += r * sum(freq[:s])
        rng = r * freq[s]
        while rng < (1 << 24):
            acc <<= 8
            shifts += 1
            rng <<= 8
        freq[s] += 1
        if sum(freq) > (1 << 16):
            freq = [max(1, f // 2) for f in freq]
    # Bytes shifted out of low are the top bytes of acc; low sits in the last 32 bits.
    nbytes = shifts + 4
    assert acc >> (8 * nbytes) == 0
    return acc.to_bytes(nbytes, "big")


def lcg(seed, n, alphabet):
    out = []
    x = seed
    for _ in range(n):
        x = (x * 6364136223846793005 + 1442695040888963407) % (1 << 64)
        out.append((x >> 33) % alphabet)
    return out


cases = {
    "three": ([0, 1, 2, 2, 1, 0, 0, 0], 3),
    "lcg10": (lcg(7, 200, 10), 10),
    "skewed": ([0] * 150 + [1] + [0] * 40 + [2, 2], 3),
    "long": (lcg(3, 70000, 2), 2),
}
for name, (syms, a) in cases.items():
    payload = encode(syms, a)
    if name == "long":
        h = 0xCBF29CE484222325
        for byte in payload:
            h = ((h ^ byte) * 0x100000001B3) % (1 << 64)
        print(name, len(payload), "fnv1a64=%016x" % h)
    else:
        print(name, len(payload), payload.hex())
