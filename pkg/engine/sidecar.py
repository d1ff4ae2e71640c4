"""
Binary sidecar format of corpus samples.

Layout (all integers big-endian):

    magic     4 bytes   b'WGFZ'
    version   u16
    layer     u8        0 = syntax tree, 1 = IR module
    length    u32       payload byte count
    payload   length bytes

A tree payload is the pre-order node list, each node as
``kind (u8 index into NodeKind) | text (u32 length + UTF-8) | child count
(u32)``, followed by the diagnostics. An IR payload is a self-describing
value encoding: every dataclass carries its class name and its fields in
declaration order, so the module decodes to an equal object.
"""

import struct
from dataclasses import fields, is_dataclass
from io import BytesIO
from typing import Tuple

import ir.module as ir_module
import ir.types as ir_types
from config.config import SIDECAR_MAGIC, SIDECAR_VERSION
from ir.module import IrModule
from syntax.nodes import AstNode, AstTree, Diagnostic, NodeKind

LAYER_CODES = {'ast': 0, 'ir': 1}
LAYER_NAMES = {v: k for k, v in LAYER_CODES.items()}

_HEADER = struct.Struct('>4sHBI')
_KINDS = list(NodeKind)
_KIND_INDEX = {kind: i for i, kind in enumerate(_KINDS)}


class SidecarError(Exception):
    """Corrupt or incompatible sidecar data."""


def _ir_classes():
    classes = {}
    for module in (ir_module, ir_types):
        for name in dir(module):
            obj = getattr(module, name)
            if isinstance(obj, type) and is_dataclass(obj) and obj.__module__ == module.__name__:
                classes[name] = obj
    return classes


IR_CLASSES = _ir_classes()


# ============================================================================
# Primitive writer / reader
# ============================================================================

class _Writer:
    def __init__(self):
        self.out = BytesIO()

    def u8(self, value: int):
        self.out.write(struct.pack('>B', value))

    def u32(self, value: int):
        self.out.write(struct.pack('>I', value))

    def text(self, value: str):
        data = value.encode('utf-8', errors='surrogatepass')
        self.u32(len(data))
        self.out.write(data)

    def value(self, value):
        """Tagged encoding of IR values."""
        if value is None:
            self.out.write(b'N')
        elif value is True:
            self.out.write(b'T')
        elif value is False:
            self.out.write(b'F')
        elif isinstance(value, int):
            self.out.write(b'I')
            self.text(str(value))
        elif isinstance(value, float):
            self.out.write(b'D')
            self.out.write(struct.pack('>d', value))
        elif isinstance(value, str):
            self.out.write(b'S')
            self.text(value)
        elif isinstance(value, (list, tuple)):
            self.out.write(b'L' if isinstance(value, list) else b'U')
            self.u32(len(value))
            for item in value:
                self.value(item)
        elif is_dataclass(value) and type(value).__name__ in IR_CLASSES:
            self.out.write(b'O')
            self.text(type(value).__name__)
            members = fields(value)
            self.u32(len(members))
            for f in members:
                self.value(getattr(value, f.name))
        else:
            raise SidecarError(f"cannot encode {type(value).__name__}")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise SidecarError("truncated sidecar payload")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack('>I', self.take(4))[0]

    def text(self) -> str:
        return self.take(self.u32()).decode('utf-8', errors='surrogatepass')

    def value(self):
        tag = self.take(1)
        if tag == b'N':
            return None
        if tag == b'T':
            return True
        if tag == b'F':
            return False
        if tag == b'I':
            return int(self.text())
        if tag == b'D':
            return struct.unpack('>d', self.take(8))[0]
        if tag == b'S':
            return self.text()
        if tag in (b'L', b'U'):
            items = [self.value() for _ in range(self.u32())]
            return items if tag == b'L' else tuple(items)
        if tag == b'O':
            name = self.text()
            cls = IR_CLASSES.get(name)
            if cls is None:
                raise SidecarError(f"unknown IR class '{name}'")
            values = [self.value() for _ in range(self.u32())]
            names = [f.name for f in fields(cls)]
            if len(values) != len(names):
                raise SidecarError(f"field count mismatch for {name}")
            return cls(**dict(zip(names, values)))
        raise SidecarError(f"unknown value tag {tag!r}")


# ============================================================================
# Payloads
# ============================================================================

def _encode_tree(tree: AstTree, w: _Writer):
    stack = [tree.root]
    while stack:
        node = stack.pop()
        w.u8(_KIND_INDEX[node.kind])
        w.text(node.text)
        w.u32(len(node.children))
        stack.extend(reversed(node.children))
    w.u32(len(tree.diagnostics))
    for d in tree.diagnostics:
        w.text(d.code)
        w.text(d.message)
        w.value(d.offset)


def _decode_tree(r: _Reader) -> AstTree:
    def node():
        index = r.u8()
        if index >= len(_KINDS):
            raise SidecarError(f"unknown node kind {index}")
        return AstNode(_KINDS[index], r.text(), []), r.u32()

    root, count = node()
    # (node, children still to read)
    stack = [[root, count]]
    while stack:
        top = stack[-1]
        if top[1] == 0:
            stack.pop()
            continue
        top[1] -= 1
        child, child_count = node()
        top[0].children.append(child)
        stack.append([child, child_count])
    diagnostics = [Diagnostic(r.text(), r.text(), r.value()) for _ in range(r.u32())]
    return AstTree(root, diagnostics)


def encode_sidecar(layer: str, payload) -> bytes:
    """Serialize a sample representation.

    Raises:
        SidecarError: If the payload cannot be encoded
    """
    if layer not in LAYER_CODES:
        raise SidecarError(f"unknown layer '{layer}'")
    w = _Writer()
    if layer == 'ast':
        _encode_tree(payload, w)
    else:
        w.value(payload)
    body = w.out.getvalue()
    return _HEADER.pack(SIDECAR_MAGIC, SIDECAR_VERSION, LAYER_CODES[layer], len(body)) + body


def decode_sidecar(data: bytes) -> Tuple[str, object]:
    """Inverse of ``encode_sidecar``.

    Returns:
        (layer, payload)

    Raises:
        SidecarError: On a bad header, unknown version or corrupt payload
    """
    if len(data) < _HEADER.size:
        raise SidecarError("sidecar shorter than its header")
    magic, version, code, length = _HEADER.unpack_from(data)
    if magic != SIDECAR_MAGIC:
        raise SidecarError("bad sidecar magic")
    if version != SIDECAR_VERSION:
        raise SidecarError(f"unsupported sidecar version {version}")
    if code not in LAYER_NAMES:
        raise SidecarError(f"unknown layer code {code}")
    body = data[_HEADER.size:]
    if len(body) != length:
        raise SidecarError(f"payload length {len(body)} does not match header {length}")
    r = _Reader(body)
    layer = LAYER_NAMES[code]
    try:
        payload = _decode_tree(r) if layer == 'ast' else r.value()
    except (UnicodeDecodeError, struct.error, TypeError, ValueError) as e:
        raise SidecarError(f"corrupt sidecar payload: {e}")
    if r.pos != len(body):
        raise SidecarError("trailing bytes in sidecar payload")
    if layer == 'ir' and not isinstance(payload, IrModule):
        raise SidecarError("IR sidecar does not hold a module")
    return layer, payload
