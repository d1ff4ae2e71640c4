"""
Token dictionary for the Replace mutation.
"""

import re
from dataclasses import dataclass, field
from typing import List

KEYWORD_TOKENS = (
    'fn', 'struct', 'var', 'let', 'const', 'override', 'return', 'if', 'else',
    'loop', 'continuing', 'for', 'while', 'switch', 'case', 'default', 'break',
    'continue', 'discard', 'true', 'false',
    'private', 'function', 'storage', 'uniform', 'workgroup', 'read', 'read_write',
)

TYPE_TOKENS = (
    'bool', 'i32', 'u32', 'f32', 'f16', 'vec2', 'vec3', 'vec4',
    'mat2x2', 'mat3x3', 'mat4x4', 'mat2x4', 'array', 'ptr', 'atomic',
)

BUILTIN_FUNCTION_TOKENS = (
    'abs', 'acos', 'all', 'any', 'arrayLength', 'asin', 'atan', 'atan2', 'ceil',
    'clamp', 'cos', 'cosh', 'countOneBits', 'cross', 'degrees', 'determinant',
    'distance', 'dot', 'exp', 'exp2', 'faceForward', 'floor', 'fract',
    'inverseSqrt', 'length', 'log', 'log2', 'max', 'min', 'mix', 'normalize',
    'pow', 'radians', 'reflect', 'reverseBits', 'round', 'select', 'sign', 'sin',
    'sinh', 'smoothstep', 'sqrt', 'step', 'tan', 'tanh', 'transpose', 'trunc',
    'bitcast', 'firstLeadingBit', 'firstTrailingBit',
)

ATTRIBUTE_TOKENS = (
    'location', 'builtin', 'group', 'binding', 'workgroup_size', 'vertex',
    'fragment', 'compute', 'interpolate', 'align', 'size', 'position',
    'global_invocation_id', 'local_invocation_index', 'vertex_index',
    'front_facing', 'frag_depth',
)

SWIZZLE_TOKENS = ('x', 'xy', 'xyz', 'xyzw', 'wzyx', 'rgba', 'rrr', 'xxxx', 'zw')

OPERATOR_TOKENS = ('+', '-', '*', '/', '%', '<<', '>>', '&&', '||', '==', '!=', '<', '>=', '!', '~')

# 0, 1, -1, 2^31-1, 2^32, 2^64, 2^128, 1e38, nan, 0x7fffffff and a few suffixed variants
LITERAL_TOKENS = (
    '0', '1', '-1', '2147483647', '4294967296', '18446744073709551616',
    '340282366920938463463374607431768211456', '1e38', 'nan', '0x7fffffff',
    '0u', '4294967295u', '-2147483648i', '0.0', '-0.0', '3.4e38f', '1e-45f', '1e39f',
)

PUNCTUATION_TOKENS = ('(', ')', '{', '}', '[', ']', ';', ',', ':', '<', '>', '@', '.', '->')

_DICT_LINE = re.compile(r'^(?:[\w.\-]+\s*=\s*)?"(.*)"$')


def _fits_64_bits(text: str) -> bool:
    try:
        value = int(text, 0)
    except ValueError:
        return True
    return -(1 << 63) <= value < (1 << 64)


@dataclass
class TokenDictionary:
    entries: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("token dictionary must not be empty")
        if any(not isinstance(e, str) or not e for e in self.entries):
            raise ValueError("token dictionary entries must be non-empty strings")
        if not self.oversized_literals():
            raise ValueError("token dictionary needs a numeric literal wider than 64 bits")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def oversized_literals(self) -> List[str]:
        """Numeric entries that need more than 64 bits."""
        return [e for e in self.entries if e.isdigit() and not _fits_64_bits(e)]


def default_dictionary() -> TokenDictionary:
    entries = []
    seen = set()
    for group in (KEYWORD_TOKENS, TYPE_TOKENS, BUILTIN_FUNCTION_TOKENS, ATTRIBUTE_TOKENS,
                  SWIZZLE_TOKENS, OPERATOR_TOKENS, LITERAL_TOKENS, PUNCTUATION_TOKENS):
        for entry in group:
            if entry not in seen:
                seen.add(entry)
                entries.append(entry)
    return TokenDictionary(entries)


def load_dictionary(path: str) -> TokenDictionary:
    """Read an AFL-style dictionary file (`name="token"` or bare `"token"` lines)
    and append its tokens to the default dictionary.
    """
    base = default_dictionary()
    extra = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            match = _DICT_LINE.match(line)
            if match:
                token = match.group(1).encode('utf-8').decode('unicode_escape')
                if token and token not in base.entries and token not in extra:
                    extra.append(token)
    return TokenDictionary(base.entries + extra)
