# services: graph storage and the traversal runtime
