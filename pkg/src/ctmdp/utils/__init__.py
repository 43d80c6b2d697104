# ctmdp utils package
