"""Bit-level writer/reader used by the certificate wire format."""


class BitWriter:
    def __init__(self):
        self._bits = []

    def write(self, value, width):
        if width < 0 or value < 0 or (width < 64 and value >> width):
            raise ValueError(f"value {value} does not fit in {width} bits")
        for i in range(width - 1, -1, -1):
            self._bits.append((value >> i) & 1)

    def write_bits(self, bits):
        self._bits.extend(int(b) & 1 for b in bits)

    def write_gamma(self, value):
        """Elias-gamma code for value >= 1."""
        if value < 1:
            raise ValueError("gamma code needs a positive integer")
        width = value.bit_length()
        self.write(0, width - 1)
        self.write(value, width)

    def __len__(self):
        return len(self._bits)

    def bits(self):
        return tuple(self._bits)

    def to_bytes(self):
        out = bytearray((len(self._bits) + 7) // 8)
        for i, b in enumerate(self._bits):
            if b:
                out[i >> 3] |= 0x80 >> (i & 7)
        return bytes(out), len(self._bits)


class BitReader:
    """Reads MSB-first bits; raises EOFError past the declared bit length."""

    def __init__(self, data, bit_length):
        if bit_length > 8 * len(data):
            raise ValueError("bit_length exceeds payload")
        self._data = data
        self._n = bit_length
        self.pos = 0

    def remaining(self):
        return self._n - self.pos

    def read(self, width):
        if width > self.remaining():
            raise EOFError("read past end of certificate")
        value = 0
        for _ in range(width):
            i = self.pos
            value = (value << 1) | ((self._data[i >> 3] >> (7 - (i & 7))) & 1)
            self.pos += 1
        return value

    def read_bits(self, width):
        if width > self.remaining():
            raise EOFError("read past end of certificate")
        out = tuple((self._data[(self.pos + j) >> 3] >> (7 - ((self.pos + j) & 7))) & 1
                    for j in range(width))
        self.pos += width
        return out

    def read_gamma(self):
        zeros = 0
        while self.read(1) == 0:
            zeros += 1
            if zeros > 48:
                raise ValueError("gamma prefix too long")
        return (1 << zeros) | self.read(zeros)
