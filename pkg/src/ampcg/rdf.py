"""
Turtle interchange for chain graphs.

Vertices become ``amp:Vertex`` resources under the base namespace; every edge is a blank
node typed ``amp:DirectedEdge`` (with ``amp:source`` and ``amp:target``) or
``amp:UndirectedEdge`` (with two ``amp:endpoint`` values).
"""
import logging

import rdflib
from rdflib import RDF, BNode, Graph, Literal, Namespace, URIRef

from .exceptions import GraphFormatError
from .graph import ChainGraph

logger = logging.getLogger(__name__)

AMP = Namespace("http://example.com/ampcg#")
BASE = "http://example.com/vertex/"


def to_rdf(g, base=BASE):
    rdf = Graph()
    rdf.bind("amp", AMP)
    ns = Namespace(base)
    for position, v in enumerate(g.vertices):
        node = ns[v]
        rdf.add((node, RDF.type, AMP.Vertex))
        rdf.add((node, AMP.label, Literal(v)))
        rdf.add((node, AMP.position, Literal(position)))
    for a, b in sorted(g.directed_edges):
        edge = BNode()
        rdf.add((edge, RDF.type, AMP.DirectedEdge))
        rdf.add((edge, AMP.source, ns[a]))
        rdf.add((edge, AMP.target, ns[b]))
    for e in sorted(tuple(sorted(e)) for e in g.undirected_edges):
        edge = BNode()
        rdf.add((edge, RDF.type, AMP.UndirectedEdge))
        for v in e:
            rdf.add((edge, AMP.endpoint, ns[v]))
    return rdf


def from_rdf(rdf):
    labels = {}
    positions = {}
    for node in rdf.subjects(RDF.type, AMP.Vertex):
        label = rdf.value(node, AMP.label)
        if label is None:
            raise GraphFormatError(f"vertex {node} has no amp:label")
        labels[node] = str(label)
        position = rdf.value(node, AMP.position)
        positions[node] = int(position) if position is not None else len(positions)

    def name(node):
        if node not in labels:
            raise GraphFormatError(f"edge endpoint {node} is not an amp:Vertex")
        return labels[node]

    directed = []
    for edge in rdf.subjects(RDF.type, AMP.DirectedEdge):
        directed.append((name(rdf.value(edge, AMP.source)), name(rdf.value(edge, AMP.target))))
    undirected = []
    for edge in rdf.subjects(RDF.type, AMP.UndirectedEdge):
        ends = [name(n) for n in rdf.objects(edge, AMP.endpoint)]
        if len(ends) != 2:
            raise GraphFormatError(f"undirected edge {edge} needs two amp:endpoint values")
        undirected.append(tuple(ends))
    vertices = [labels[n] for n in sorted(labels, key=positions.__getitem__)]
    return ChainGraph(vertices, directed, undirected)


def write_turtle(g, path, base=BASE):
    to_rdf(g, base).serialize(destination=path, format="turtle")
    logger.info("##### Saved RDF graph to: %s", path)


def read_turtle(path):
    try:
        rdf = rdflib.Graph().parse(path, format="turtle")
    except (OSError, SyntaxError) as e:
        raise GraphFormatError(f"cannot read {path}: {e}")
    return from_rdf(rdf)
