import pytest

from config.config import MAX_SOURCE_BYTES
from syntax.nodes import AstNode, NodeKind, iter_nodes, leaves, structural_equal, well_formed
from syntax.parser import ParseFailure, parse
from syntax.unparse import normalize, unparse


def test_vertex_shader_top_level(vertex_source):
    tree = parse(vertex_source)
    kinds = [child.kind for child in tree.root.children]
    assert tree.root.kind == NodeKind.TRANSLATION_UNIT
    assert kinds == [NodeKind.STRUCT_DECL, NodeKind.FUNCTION_DECL, NodeKind.FUNCTION_DECL]
    assert tree.error_count() == 0


def test_leaves_cover_the_input(vertex_source):
    tree = parse(vertex_source)
    joined = ''.join(leaf.text for leaf in leaves(tree.root))
    assert joined == ''.join(vertex_source.split())


def test_empty_input_fails():
    with pytest.raises(ParseFailure):
        parse('')
    with pytest.raises(ParseFailure):
        parse(b'')


def test_oversized_input_fails():
    with pytest.raises(ParseFailure):
        parse('fn f() {}' + ' ' * MAX_SOURCE_BYTES)


def test_empty_function_body():
    tree = parse('fn f() {}')
    assert len(tree.root.children) == 1
    fn = tree.root.children[0]
    assert fn.kind == NodeKind.FUNCTION_DECL
    body = fn.children[-1]
    assert body.kind == NodeKind.COMPOUND_STMT
    assert [c.text for c in body.children] == ['{', '}']
    assert structural_equal(parse(unparse(tree)).root, tree.root)


def test_single_leaf_unparse():
    assert unparse(AstNode.leaf(NodeKind.IDENTIFIER, 'x')) == 'x'


def test_unparse_is_deterministic(vertex_source):
    tree = parse(vertex_source)
    assert unparse(tree) == unparse(tree.clone())


def test_round_trip_of_seeds(seeds_dir):
    import os
    for name in sorted(os.listdir(seeds_dir)):
        with open(os.path.join(seeds_dir, name), encoding='utf-8') as f:
            tree = parse(f.read())
        again = parse(unparse(tree))
        assert structural_equal(again.root, tree.root), name
        assert structural_equal(normalize(tree).root, again.root)


def test_damaged_input_keeps_error_nodes():
    tree = parse(b'fn f( { let = ; }} @@ struct \xff\xfe {')
    assert tree.root.kind == NodeKind.TRANSLATION_UNIT
    assert tree.error_count() > 0
    assert well_formed(tree.root)
    again = parse(unparse(tree))
    assert structural_equal(again.root, normalize(tree).root)


def test_error_node_recovery_continues_parsing():
    tree = parse('fn broken( { ??? }\nfn ok() { return; }')
    names = [n.text for n in iter_nodes(tree.root) if n.kind == NodeKind.IDENTIFIER]
    assert 'ok' in names
    assert tree.error_count() > 0


def test_nesting_limit_is_a_diagnostic():
    source = 'fn f() ' + '{' * 40 + '}' * 40
    tree = parse(source, max_nesting=10)
    assert tree.has_limit_diagnostic()
    assert tree.depth() < 40


def test_template_close_split():
    tree = parse('var<private> a: array<vec2<f32>, 2>;\nfn f() { let b = vec2<vec2<f32>>(); }')
    texts = [leaf.text for leaf in leaves(tree.root)]
    assert '>>' not in texts
    assert structural_equal(parse(unparse(tree)).root, tree.root)
