# Export ALL
